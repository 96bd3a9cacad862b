#ifndef DURCAST_FORECAST_HPP
#define DURCAST_FORECAST_HPP

#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "durcast/dates.hpp"
#include "durcast/errors.hpp"

namespace durcast {

/// Number of bins the forecasting interface quantizes a prediction window
/// into (101 intervals of 20h 9m 36s over an 84-day window).
inline constexpr int kForecastBins = 101;

/// One slider-built component: a two-piece logistic density with independent
/// left/right scales, continuous at the center. Center and widths are in
/// days from window_start.
struct MixtureComponent {
    double center = 0.0;
    double left_width = 1.0;
    double right_width = 1.0;
    double weight = 1.0;
};

/// A raw forecast submission: either an explicit 101-bin pmf or a mixture of
/// 1..5 logistic components.
struct ForecastRecord {
    std::string participant_id;
    std::string created_at;  // original timestamp text
    CivilDate created_day{};
    CivilDate window_start{};
    CivilDate window_end{};
    std::vector<double> pmf;                  // size 101 when present
    std::vector<MixtureComponent> mixture;    // 1..5 components when present

    bool has_pmf() const { return !pmf.empty(); }
    bool has_mixture() const { return !mixture.empty(); }
};

namespace detail {

inline double logistic_pdf_std(double z) {
    const double e = std::exp(-std::abs(z));
    const double d = 1.0 + e;
    return e / (d * d);
}

/// Two-piece logistic density, normalized over the whole real line.
inline double two_piece_logistic_pdf(const MixtureComponent& c, double x) {
    const double scale = (x < c.center) ? c.left_width : c.right_width;
    const double z = (x - c.center) / scale;
    return 2.0 / (c.left_width + c.right_width) * logistic_pdf_std(z);
}

}  // namespace detail

/// Evaluates the weighted mixture at the 101 bin midpoints and renormalizes
/// over the window.
inline std::vector<double> discretize_mixture(const ForecastRecord& record) {
    if (!record.has_mixture())
        throw std::invalid_argument("discretize_mixture: record holds no mixture");
    const double window_days = static_cast<double>(record.window_end - record.window_start);
    const double bin_width = window_days / kForecastBins;
    std::vector<double> pmf(kForecastBins, 0.0);
    double total = 0.0;
    for (int i = 0; i < kForecastBins; ++i) {
        const double x = (i + 0.5) * bin_width;
        double density = 0.0;
        for (const auto& c : record.mixture)
            density += c.weight * detail::two_piece_logistic_pdf(c, x);
        pmf[i] = density;
        total += density;
    }
    if (!(total > 0.0) || !std::isfinite(total))
        throw degenerate_distribution_error(
            "discretize_mixture: mixture places no mass inside the prediction window");
    for (double& p : pmf) p /= total;
    return pmf;
}

/// Bin index of the median: smallest bin whose cumulative mass reaches 0.5.
inline int median_bin(const std::vector<double>& pmf) {
    double cum = 0.0;
    for (std::size_t i = 0; i < pmf.size(); ++i) {
        cum += pmf[i];
        if (cum >= 0.5) return static_cast<int>(i);
    }
    return static_cast<int>(pmf.size()) - 1;
}

/// Calendar day containing the start of bin `i`: bin i covers
/// [window_start + i*W/101, window_start + (i+1)*W/101) where W is the
/// window length in days, truncated to day resolution.
inline CivilDate bin_date(int bin, CivilDate window_start, CivilDate window_end) {
    const long window_days = window_end - window_start;
    const long offset = static_cast<long>(bin) * window_days / kForecastBins;
    return window_start + static_cast<int>(offset);
}

/// Median of a 101-bin pmf mapped to a calendar day.
inline CivilDate median_date(const std::vector<double>& pmf, CivilDate window_start,
                             CivilDate window_end) {
    return bin_date(median_bin(pmf), window_start, window_end);
}

/// Day of the right end-point forecast: the day containing the start of the
/// last bin. A median there (or beyond) is uninterpretable because mass may
/// lie past the window bound.
inline CivilDate right_endpoint_date(CivilDate window_start, CivilDate window_end) {
    return bin_date(kForecastBins - 1, window_start, window_end);
}

/// Derived per-forecast measures, all in integer days relative to t_0.
struct Prediction {
    std::string participant_id;
    CivilDate prediction_date{};  // UTC day the forecast was created
    CivilDate predicted_date{};   // median of the submitted distribution
    int t_past = 0;               // prediction_date - t_0
    int t_predicted = 0;          // predicted_date - t_0
    int horizon = 0;              // predicted_date - prediction_date
};

inline Prediction make_prediction(const ForecastRecord& record, CivilDate t0) {
    std::vector<double> derived;
    const std::vector<double>* use = &record.pmf;
    if (!record.has_pmf()) {
        derived = discretize_mixture(record);
        use = &derived;
    }
    Prediction p;
    p.participant_id = record.participant_id;
    p.prediction_date = record.created_day;
    p.predicted_date = median_date(*use, record.window_start, record.window_end);
    p.t_past = p.prediction_date - t0;
    p.t_predicted = p.predicted_date - t0;
    p.horizon = p.predicted_date - p.prediction_date;
    return p;
}

enum class FilterOutcome { keep, endpoint, pre_t0, impossible };

/// Filter predicate applied in the fixed order end-point, pre-t_0,
/// theoretically impossible. A forecast made or targeted before t_0 has no
/// defined elapsed duration, so both fall under pre_t0.
inline FilterOutcome classify_prediction(const Prediction& p, CivilDate window_start,
                                         CivilDate window_end, CivilDate t0) {
    if (p.predicted_date == window_start ||
        p.predicted_date >= right_endpoint_date(window_start, window_end))
        return FilterOutcome::endpoint;
    if (p.predicted_date < t0 || p.prediction_date < t0) return FilterOutcome::pre_t0;
    if (p.t_predicted < p.t_past) return FilterOutcome::impossible;
    return FilterOutcome::keep;
}

struct FilterReport {
    std::int64_t input_count = 0;
    std::int64_t removed_endpoint = 0;
    std::int64_t removed_pre_t0 = 0;
    std::int64_t removed_impossible = 0;
    std::int64_t output_count = 0;
    std::int64_t participants_in = 0;
    std::int64_t participants_out = 0;
};

inline std::pair<std::vector<Prediction>, FilterReport> apply_filters(
    const std::vector<Prediction>& records, CivilDate window_start, CivilDate window_end,
    CivilDate t0) {
    std::vector<Prediction> kept;
    FilterReport report;
    report.input_count = static_cast<std::int64_t>(records.size());
    std::set<std::string> in_ids, out_ids;
    for (const auto& p : records) {
        in_ids.insert(p.participant_id);
        switch (classify_prediction(p, window_start, window_end, t0)) {
            case FilterOutcome::endpoint: ++report.removed_endpoint; break;
            case FilterOutcome::pre_t0: ++report.removed_pre_t0; break;
            case FilterOutcome::impossible: ++report.removed_impossible; break;
            case FilterOutcome::keep:
                kept.push_back(p);
                out_ids.insert(p.participant_id);
                break;
        }
    }
    report.output_count = static_cast<std::int64_t>(kept.size());
    report.participants_in = static_cast<std::int64_t>(in_ids.size());
    report.participants_out = static_cast<std::int64_t>(out_ids.size());
    return {std::move(kept), report};
}

struct DailyAggregate {
    CivilDate date{};
    double mean_t_predicted = 0.0;
    double mean_horizon = 0.0;
    int count = 0;
};

/// Groups by prediction day (UTC) and averages; days without predictions are
/// simply absent.
inline std::vector<DailyAggregate> aggregate_daily(const std::vector<Prediction>& predictions) {
    std::map<CivilDate, std::pair<std::pair<double, double>, int>> acc;
    for (const auto& p : predictions) {
        auto& slot = acc[p.prediction_date];
        slot.first.first += p.t_predicted;
        slot.first.second += p.horizon;
        slot.second += 1;
    }
    std::vector<DailyAggregate> out;
    out.reserve(acc.size());
    for (const auto& [date, slot] : acc)
        out.push_back({date, slot.first.first / slot.second, slot.first.second / slot.second,
                       slot.second});
    return out;
}

/// Days from each date until the actual peak; negative after it.
inline std::vector<int> ground_truth_horizon(const std::vector<CivilDate>& dates,
                                             CivilDate peak_date) {
    std::vector<int> out;
    out.reserve(dates.size());
    for (CivilDate d : dates) out.push_back(peak_date - d);
    return out;
}

// ---- interchange file: one JSON record per line -------------------------

inline ForecastRecord forecast_record_from_json(const nlohmann::json& j) {
    ForecastRecord rec;
    rec.participant_id = j.at("participant_id").get<std::string>();
    rec.created_at = j.at("created_at").get<std::string>();
    rec.created_day = utc_day_of_timestamp(rec.created_at);
    rec.window_start = parse_date(j.at("window_start").get<std::string>());
    rec.window_end = parse_date(j.at("window_end").get<std::string>());
    if (rec.window_end <= rec.window_start)
        throw parse_error("forecast record: window_end must be after window_start");
    const bool has_pmf = j.contains("pmf");
    const bool has_mix = j.contains("mixture");
    if (has_pmf == has_mix)
        throw parse_error("forecast record: exactly one of pmf / mixture required");
    if (has_pmf) {
        rec.pmf = j.at("pmf").get<std::vector<double>>();
        if (rec.pmf.size() != kForecastBins)
            throw parse_error("forecast record: pmf must have 101 entries");
        double total = 0.0;
        for (double p : rec.pmf) {
            if (p < 0.0) throw parse_error("forecast record: negative pmf entry");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-6)
            throw parse_error("forecast record: pmf must sum to 1");
    } else {
        double wsum = 0.0;
        for (const auto& cj : j.at("mixture")) {
            MixtureComponent c;
            c.center = cj.at("center").get<double>();
            c.left_width = cj.at("left_width").get<double>();
            c.right_width = cj.at("right_width").get<double>();
            c.weight = cj.at("weight").get<double>();
            if (!(c.left_width > 0.0) || !(c.right_width > 0.0))
                throw parse_error("forecast record: component widths must be positive");
            if (c.weight < 0.0)
                throw parse_error("forecast record: component weight must be non-negative");
            wsum += c.weight;
            rec.mixture.push_back(c);
        }
        if (rec.mixture.empty() || rec.mixture.size() > 5)
            throw parse_error("forecast record: mixture must have 1..5 components");
        if (std::abs(wsum - 1.0) > 1e-6)
            throw parse_error("forecast record: mixture weights must sum to 1");
    }
    return rec;
}

inline std::vector<ForecastRecord> read_forecasts_jsonl(std::istream& is,
                                                        const std::string& source = "") {
    std::vector<ForecastRecord> out;
    std::string line;
    long lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        try {
            out.push_back(forecast_record_from_json(nlohmann::json::parse(line)));
        } catch (const parse_error& e) {
            throw parse_error(e.what(), source, lineno);
        } catch (const std::exception& e) {
            throw parse_error(std::string("forecast record: ") + e.what(), source, lineno);
        }
    }
    return out;
}

}  // namespace durcast

#endif
