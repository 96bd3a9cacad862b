#ifndef DURCAST_DATES_HPP
#define DURCAST_DATES_HPP

#include <compare>
#include <cstdint>
#include <cstdio>
#include <string>

#include "durcast/errors.hpp"

namespace durcast {

/// Calendar day stored as days since 1970-01-01 (proleptic Gregorian, UTC).
struct CivilDate {
    std::int32_t days = 0;

    constexpr auto operator<=>(const CivilDate&) const = default;

    constexpr CivilDate operator+(int n) const { return CivilDate{days + n}; }
    constexpr CivilDate operator-(int n) const { return CivilDate{days - n}; }
    constexpr int operator-(CivilDate other) const { return days - other.days; }
    CivilDate& operator++() { ++days; return *this; }
};

namespace detail {

// Howard Hinnant's civil-from-days / days-from-civil algorithms.
constexpr std::int32_t days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int32_t>(doe) - 719468;
}

struct Ymd {
    int year;
    unsigned month;
    unsigned day;
};

constexpr Ymd civil_from_days(std::int32_t z) {
    z += 719468;
    const std::int32_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const int y = static_cast<int>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return {y + (m <= 2), m, d};
}

constexpr bool valid_ymd(int y, int m, int d) {
    if (m < 1 || m > 12 || d < 1) return false;
    constexpr int len[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    int n = len[m - 1];
    if (m == 2 && ((y % 4 == 0 && y % 100 != 0) || y % 400 == 0)) n = 29;
    return d <= n && y >= -9999 && y <= 9999;
}

}  // namespace detail

inline CivilDate make_date(int year, int month, int day) {
    if (!detail::valid_ymd(year, month, day))
        throw parse_error("invalid calendar date");
    return CivilDate{detail::days_from_civil(year, static_cast<unsigned>(month),
                                             static_cast<unsigned>(day))};
}

inline std::string to_string(CivilDate d) {
    const auto ymd = detail::civil_from_days(d.days);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", ymd.year, ymd.month, ymd.day);
    return buf;
}

namespace detail {

inline bool read_int(const char*& p, int digits, int& out) {
    out = 0;
    for (int i = 0; i < digits; ++i) {
        if (*p < '0' || *p > '9') return false;
        out = out * 10 + (*p++ - '0');
    }
    return true;
}

}  // namespace detail

/// Accepts "YYYY-MM-DD" and "MM/DD/YYYY".
inline CivilDate parse_date(const std::string& text) {
    const char* p = text.c_str();
    int a = 0, b = 0, c = 0;
    if (text.size() == 10 && text[4] == '-' && text[7] == '-') {
        if (detail::read_int(p, 4, a) && *p++ == '-' && detail::read_int(p, 2, b) &&
            *p++ == '-' && detail::read_int(p, 2, c) && *p == '\0')
            return make_date(a, b, c);
    } else if (text.size() == 10 && text[2] == '/' && text[5] == '/') {
        if (detail::read_int(p, 2, a) && *p++ == '/' && detail::read_int(p, 2, b) &&
            *p++ == '/' && detail::read_int(p, 4, c) && *p == '\0')
            return make_date(c, a, b);
    }
    throw parse_error("cannot parse date '" + text + "'");
}

/// Parses an ISO-8601 style timestamp and returns the UTC calendar day.
/// Accepts "YYYY-MM-DD", "YYYY-MM-DD[T ]HH:MM[:SS[.fff]]" with optional
/// trailing "Z" or "+hh:mm" / "-hh:mm" / "+hhmm" offset.
inline CivilDate utc_day_of_timestamp(const std::string& text) {
    const char* p = text.c_str();
    int y = 0, mo = 0, d = 0;
    if (!detail::read_int(p, 4, y) || *p++ != '-' || !detail::read_int(p, 2, mo) ||
        *p++ != '-' || !detail::read_int(p, 2, d))
        throw parse_error("cannot parse timestamp '" + text + "'");
    CivilDate day = make_date(y, mo, d);
    if (*p == '\0') return day;
    if (*p != 'T' && *p != ' ')
        throw parse_error("cannot parse timestamp '" + text + "'");
    ++p;
    int hh = 0, mi = 0, ss = 0;
    if (!detail::read_int(p, 2, hh) || *p++ != ':' || !detail::read_int(p, 2, mi))
        throw parse_error("cannot parse timestamp '" + text + "'");
    if (*p == ':') {
        ++p;
        if (!detail::read_int(p, 2, ss))
            throw parse_error("cannot parse timestamp '" + text + "'");
        if (*p == '.') {
            ++p;
            while (*p >= '0' && *p <= '9') ++p;
        }
    }
    long minutes_of_day = hh * 60L + mi;
    (void)ss;
    if (*p == 'Z') {
        ++p;
    } else if (*p == '+' || *p == '-') {
        const int sign = (*p == '-') ? -1 : 1;
        ++p;
        int oh = 0, om = 0;
        if (!detail::read_int(p, 2, oh))
            throw parse_error("cannot parse timestamp '" + text + "'");
        if (*p == ':') ++p;
        if (*p >= '0' && *p <= '9') {
            if (!detail::read_int(p, 2, om))
                throw parse_error("cannot parse timestamp '" + text + "'");
        }
        minutes_of_day -= sign * (oh * 60L + om);
    }
    if (*p != '\0')
        throw parse_error("cannot parse timestamp '" + text + "'");
    // Normalize to UTC: shift the day when the offset pushes across midnight.
    long total = static_cast<long>(day.days) * 1440L + minutes_of_day;
    long utc_day = total >= 0 ? total / 1440L : (total - 1439L) / 1440L;
    return CivilDate{static_cast<std::int32_t>(utc_day)};
}

}  // namespace durcast

#endif
