#ifndef DURCAST_SIGNAL_HPP
#define DURCAST_SIGNAL_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "durcast/dates.hpp"
#include "durcast/errors.hpp"

namespace durcast {

/// Centered moving average with windows that shrink symmetrically at the
/// edges. Even windows take the extra sample on the left.
inline std::vector<double> rolling_mean_centered(const std::vector<double>& values, int window) {
    if (window < 1) throw std::invalid_argument("rolling_mean_centered: window must be >= 1");
    const std::size_t n = values.size();
    std::vector<double> out(n, 0.0);
    const int left = window / 2;
    const int right = (window - 1) / 2;
    for (std::size_t i = 0; i < n; ++i) {
        int h_left = left, h_right = right;
        if (window % 2 == 1) {
            // symmetric shrink toward the edges
            const int h = std::min<long>({static_cast<long>(left), static_cast<long>(i),
                                          static_cast<long>(n - 1 - i)});
            h_left = h_right = h;
        } else {
            h_left = std::min<long>(h_left, static_cast<long>(i));
            h_right = std::min<long>(h_right, static_cast<long>(n - 1 - i));
        }
        double acc = 0.0;
        int cnt = 0;
        for (long j = static_cast<long>(i) - h_left; j <= static_cast<long>(i) + h_right; ++j) {
            acc += values[static_cast<std::size_t>(j)];
            ++cnt;
        }
        out[i] = acc / cnt;
    }
    return out;
}

/// Cumulative counts turned into daily differences and a centered 7-day
/// rolling average. daily[i] and smoothed[i] belong to dates[i + 1]: the
/// first reported day has no previous-day value and is dropped.
struct CaseCountSeries {
    std::vector<CivilDate> dates;        // the reported days, daily cadence
    std::vector<long long> cumulative;   // same length as dates
    std::vector<double> daily;           // length dates.size() - 1
    std::vector<double> smoothed;        // same length as daily

    CivilDate daily_date(std::size_t i) const { return dates[i + 1]; }
};

inline CaseCountSeries transform_cases(const std::vector<CivilDate>& dates,
                                       const std::vector<long long>& cumulative,
                                       int smoothing_window = 7) {
    if (dates.size() != cumulative.size())
        throw std::invalid_argument("transform_cases: dates/cumulative size mismatch");
    if (dates.size() < 2)
        throw std::invalid_argument("transform_cases: need at least two days");
    for (std::size_t i = 0; i + 1 < dates.size(); ++i) {
        const int gap = dates[i + 1] - dates[i];
        if (gap != 1)
            throw malformed_series_error("transform_cases: gap between " + to_string(dates[i]) +
                                         " and " + to_string(dates[i + 1]));
    }
    CaseCountSeries series;
    series.dates = dates;
    series.cumulative = cumulative;
    series.daily.reserve(dates.size() - 1);
    // downward quality-assurance revisions stay negative, unclamped
    for (std::size_t i = 1; i < cumulative.size(); ++i)
        series.daily.push_back(static_cast<double>(cumulative[i] - cumulative[i - 1]));
    series.smoothed = rolling_mean_centered(series.daily, smoothing_window);
    return series;
}

/// Least-squares polynomial over time rescaled to [0,1], with numerical
/// first/second differentials of the fitted curve taken at one-day steps.
struct TrendFit {
    int degree = 0;
    std::vector<double> coefficients;  // ascending powers of rescaled time
    std::vector<CivilDate> dates;
    std::vector<double> fitted;
    std::vector<double> d1;  // per day
    std::vector<double> d2;  // per day^2
    double t0_days = 0.0;    // rescaling origin (days)
    double span_days = 1.0;  // rescaling span (days)

    double evaluate_days(double day) const {
        const double x = (day - t0_days) / span_days;
        double acc = 0.0, pw = 1.0;
        for (double c : coefficients) {
            acc += c * pw;
            pw *= x;
        }
        return acc;
    }
};

inline TrendFit fit_trend(const std::vector<CivilDate>& dates, const std::vector<double>& values,
                          int degree) {
    if (degree < 1) throw std::invalid_argument("fit_trend: degree must be >= 1");
    if (dates.size() != values.size())
        throw std::invalid_argument("fit_trend: dates/values size mismatch");
    const std::size_t n = dates.size();
    if (n < static_cast<std::size_t>(degree) + 1)
        throw fit_error("fit_trend: need at least degree+1 points");
    for (std::size_t i = 0; i + 1 < n; ++i)
        if (!(dates[i] < dates[i + 1]))
            throw fit_error("fit_trend: duplicate or unordered date " + to_string(dates[i + 1]));

    TrendFit fit;
    fit.degree = degree;
    fit.dates = dates;
    fit.t0_days = static_cast<double>(dates.front().days);
    fit.span_days = static_cast<double>(dates.back() - dates.front());
    if (fit.span_days <= 0.0) throw fit_error("fit_trend: zero time span");

    Eigen::MatrixXd design(n, degree + 1);
    Eigen::VectorXd rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = (dates[i].days - fit.t0_days) / fit.span_days;
        double pw = 1.0;
        for (int j = 0; j <= degree; ++j) {
            design(i, j) = pw;
            pw *= x;
        }
        rhs(i) = values[i];
    }
    const Eigen::VectorXd sol = design.colPivHouseholderQr().solve(rhs);
    fit.coefficients.assign(sol.data(), sol.data() + sol.size());

    fit.fitted.resize(n);
    fit.d1.resize(n);
    fit.d2.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double day = static_cast<double>(dates[i].days);
        const double f0 = fit.evaluate_days(day);
        const double fm = fit.evaluate_days(day - 1.0);
        const double fp = fit.evaluate_days(day + 1.0);
        fit.fitted[i] = f0;
        fit.d1[i] = (fp - fm) / 2.0;
        fit.d2[i] = fp - 2.0 * f0 + fm;
    }
    return fit;
}

// ---- SDAR change-point scoring -------------------------------------------

struct SdarParams {
    double discount_rate = 0.01;
    int order = 3;
    int smoothing_days = 5;
};

namespace detail {

/// Levinson-Durbin solve of the Yule-Walker system for AR coefficients from
/// autocovariances c[0..order]. Falls back to all-zero coefficients when the
/// system degenerates (e.g. constant input).
inline std::vector<double> solve_ar_coefficients(const std::vector<double>& c, int order) {
    std::vector<double> zero(order, 0.0);
    if (c[0] <= 1e-12 || !std::isfinite(c[0])) return zero;
    std::vector<double> a(order + 1, 0.0);
    double e = c[0];
    for (int i = 1; i <= order; ++i) {
        double acc = c[i];
        for (int j = 1; j < i; ++j) acc -= a[j] * c[i - j];
        if (std::abs(e) < 1e-300 || !std::isfinite(e)) return zero;
        const double k = acc / e;
        std::vector<double> next(a);
        next[i] = k;
        for (int j = 1; j < i; ++j) next[j] = a[j] - k * a[i - j];
        a = std::move(next);
        e *= (1.0 - k * k);
        if (!std::isfinite(e) || e <= 0.0) e = 1e-12;
    }
    for (double v : a)
        if (!std::isfinite(v)) return zero;
    return {a.begin() + 1, a.end()};
}

}  // namespace detail

/// One sequentially-discounting AR pass: per-point outlier score is the
/// negative Gaussian log-likelihood of the point under the model fitted to
/// everything before it, clamped at zero. Coefficients start at zero and the
/// innovation variance is seeded with the sample variance of the first
/// order+1 points.
inline std::vector<double> sdar_scores(const std::vector<double>& xs, double discount_rate,
                                       int order) {
    const std::size_t n = xs.size();
    std::vector<double> scores(n, 0.0);
    if (n == 0) return scores;
    const double r = discount_rate;
    double mu = xs[0];
    std::vector<double> c(order + 1, 0.0);
    const std::size_t head = std::min<std::size_t>(order + 1, n);
    double hm = 0.0;
    for (std::size_t i = 0; i < head; ++i) hm += xs[i];
    hm /= static_cast<double>(head);
    double var = 0.0;
    for (std::size_t i = 0; i < head; ++i) var += (xs[i] - hm) * (xs[i] - hm);
    var /= static_cast<double>(head);
    double sigma2 = std::max(var, 1e-12);

    for (std::size_t t = 0; t < n; ++t) {
        if (t >= static_cast<std::size_t>(order)) {
            const std::vector<double> coef = detail::solve_ar_coefficients(c, order);
            double pred = mu;
            for (int j = 1; j <= order; ++j) pred += coef[j - 1] * (xs[t - j] - mu);
            const double resid = xs[t] - pred;
            const double s2 = std::max(sigma2, 1e-12);
            const double score =
                0.5 * std::log(2.0 * M_PI * s2) + (resid * resid) / (2.0 * s2);
            scores[t] = std::max(0.0, score);
            sigma2 = (1.0 - r) * sigma2 + r * resid * resid;
        }
        const double mu_new = (1.0 - r) * mu + r * xs[t];
        for (int j = 0; j <= order; ++j)
            if (t >= static_cast<std::size_t>(j))
                c[j] = (1.0 - r) * c[j] + r * (xs[t] - mu_new) * (xs[t - j] - mu_new);
        mu = mu_new;
    }
    return scores;
}

/// Two-stage change-point scores: SDAR outlier scores, smoothed, re-scored
/// with a second SDAR pass, smoothed again. Smoothing is the centered moving
/// average used throughout this module.
inline std::vector<double> change_point_scores(const std::vector<double>& values,
                                               const SdarParams& params) {
    if (params.discount_rate <= 0.0 || params.discount_rate >= 1.0)
        throw std::invalid_argument("sdar: discount_rate must be in (0,1)");
    if (params.order < 1) throw std::invalid_argument("sdar: order must be >= 1");
    if (params.smoothing_days < 1)
        throw std::invalid_argument("sdar: smoothing_days must be >= 1");
    if (values.size() <= static_cast<std::size_t>(params.order + 2 * params.smoothing_days))
        throw insufficient_data_error("sdar: series too short for order and smoothing window");
    const auto s1 = sdar_scores(values, params.discount_rate, params.order);
    const auto y = rolling_mean_centered(s1, params.smoothing_days);
    const auto s2 = sdar_scores(y, params.discount_rate, params.order);
    return rolling_mean_centered(s2, params.smoothing_days);
}

struct ChangePoint {
    std::size_t index = 0;
    double score = 0.0;
};

struct ChangePointReport {
    std::vector<double> scores;         // per input point
    std::vector<ChangePoint> detected;  // ranked by score, descending
    SdarParams params;
};

/// Ranked interior local maxima of the change-point scores. The first
/// 2*order points are burn-in and never detected. Either keeps the top_k
/// strongest, or everything above an absolute threshold.
inline ChangePointReport sdar_change_points(const std::vector<double>& values,
                                            const SdarParams& params, int top_k = 3,
                                            std::optional<double> threshold = std::nullopt) {
    ChangePointReport report;
    report.params = params;
    report.scores = change_point_scores(values, params);
    const std::size_t burn_in = static_cast<std::size_t>(2 * params.order);
    std::vector<ChangePoint> peaks;
    for (std::size_t i = std::max<std::size_t>(burn_in, 1); i + 1 < report.scores.size(); ++i) {
        if (report.scores[i] > report.scores[i - 1] && report.scores[i] >= report.scores[i + 1])
            peaks.push_back({i, report.scores[i]});
    }
    std::stable_sort(peaks.begin(), peaks.end(), [](const ChangePoint& a, const ChangePoint& b) {
        return a.score > b.score;
    });
    if (threshold) {
        for (const auto& p : peaks)
            if (p.score >= *threshold) report.detected.push_back(p);
    } else {
        for (const auto& p : peaks) {
            if (static_cast<int>(report.detected.size()) >= top_k) break;
            report.detected.push_back(p);
        }
    }
    return report;
}

// ---- joint dynamics -------------------------------------------------------

struct JointDynamics {
    std::vector<CivilDate> dates;
    std::vector<double> case_d1;
    std::vector<double> prediction_d1;
    double sign_opposition_fraction = 0.0;  // case growing while prediction falling
};

inline JointDynamics joint_dynamics(const TrendFit& case_fit, const TrendFit& prediction_fit) {
    std::map<CivilDate, double> pred_by_date;
    for (std::size_t i = 0; i < prediction_fit.dates.size(); ++i)
        pred_by_date[prediction_fit.dates[i]] = prediction_fit.d1[i];
    JointDynamics joint;
    std::size_t opposed = 0;
    for (std::size_t i = 0; i < case_fit.dates.size(); ++i) {
        const auto it = pred_by_date.find(case_fit.dates[i]);
        if (it == pred_by_date.end()) continue;
        joint.dates.push_back(case_fit.dates[i]);
        joint.case_d1.push_back(case_fit.d1[i]);
        joint.prediction_d1.push_back(it->second);
        if (case_fit.d1[i] > 0.0 && it->second < 0.0) ++opposed;
    }
    if (joint.dates.empty())
        throw alignment_error("joint_dynamics: the two fits share no dates");
    joint.sign_opposition_fraction = static_cast<double>(opposed) / joint.dates.size();
    return joint;
}

// ---- case-count ingestion --------------------------------------------------

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace detail

/// Reads a delimited case-count export: a report-date column plus a
/// cumulative-count column; rows from multiple reporting districts on the
/// same date are summed. Returns (dates, cumulative) sorted by date.
inline std::pair<std::vector<CivilDate>, std::vector<long long>> read_case_csv(
    std::istream& is, const std::string& date_column, const std::string& count_column,
    const std::string& source = "") {
    std::string line;
    if (!std::getline(is, line)) throw parse_error("case file: empty input", source, 0);
    const auto header = detail::split_csv_line(line);
    long date_idx = -1, count_idx = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == date_column) date_idx = static_cast<long>(i);
        if (header[i] == count_column) count_idx = static_cast<long>(i);
    }
    if (date_idx < 0)
        throw parse_error("case file: missing column '" + date_column + "'", source, 1);
    if (count_idx < 0)
        throw parse_error("case file: missing column '" + count_column + "'", source, 1);

    std::map<CivilDate, long long> by_date;
    long lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() <= static_cast<std::size_t>(std::max(date_idx, count_idx)))
            throw parse_error("case file: short row", source, lineno);
        try {
            const CivilDate d = parse_date(fields[static_cast<std::size_t>(date_idx)]);
            by_date[d] += std::stoll(fields[static_cast<std::size_t>(count_idx)]);
        } catch (const std::exception& e) {
            throw parse_error(std::string("case file: ") + e.what(), source, lineno);
        }
    }
    std::pair<std::vector<CivilDate>, std::vector<long long>> out;
    out.first.reserve(by_date.size());
    out.second.reserve(by_date.size());
    for (const auto& [d, c] : by_date) {
        out.first.push_back(d);
        out.second.push_back(c);
    }
    return out;
}

}  // namespace durcast

#endif
