#ifndef DURCAST_PRIOR_RECOVERY_HPP
#define DURCAST_PRIOR_RECOVERY_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "durcast/duration_model.hpp"
#include "durcast/errors.hpp"

namespace durcast {

/// Dense (lambda, t_past) -> t_predicted grid plus per-lambda prior summaries.
/// Infeasible cells (t_past beyond every sampled duration) are stored as NaN.
/// Prior summaries are baked in so that lookups never resample.
struct RecoveryTable {
    std::vector<double> lambda_grid;
    std::vector<double> t_past_grid;
    std::vector<double> predictions;  // row-major: [lambda_index][t_past_index]
    std::vector<double> prior_medians;
    std::vector<double> prior_means;
    int sample_count = 0;
    std::uint64_t seed = 0;
    DecisionRule rule = DecisionRule::median;

    std::size_t index(std::size_t li, std::size_t ti) const {
        return li * t_past_grid.size() + ti;
    }
    double entry(std::size_t li, std::size_t ti) const { return predictions[index(li, ti)]; }
    bool feasible(std::size_t li, std::size_t ti) const {
        return std::isfinite(entry(li, ti));
    }

    /// Nearest t_past grid index; midpoints snap toward the lower value.
    std::size_t snap_t_past(double t_past) const {
        std::size_t best = 0;
        double best_d = std::abs(t_past_grid[0] - t_past);
        for (std::size_t i = 1; i < t_past_grid.size(); ++i) {
            const double d = std::abs(t_past_grid[i] - t_past);
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        return best;
    }
};

inline std::vector<double> make_lambda_grid(double lambda_min, double lambda_max,
                                            double lambda_step) {
    if (!(lambda_min > 0.0))
        throw std::invalid_argument("build_table: lambda_min must be positive");
    if (lambda_max < lambda_min)
        throw std::invalid_argument("build_table: lambda_max must be >= lambda_min");
    if (!(lambda_step > 0.0))
        throw std::invalid_argument("build_table: lambda_step must be positive");
    const auto count =
        static_cast<std::size_t>(std::floor((lambda_max - lambda_min) / lambda_step + 1e-9)) + 1;
    std::vector<double> grid(count);
    for (std::size_t i = 0; i < count; ++i) grid[i] = lambda_min + static_cast<double>(i) * lambda_step;
    return grid;
}

/// Seed for the lambda at position `index`; rebuilds are bit-identical and
/// each lambda's sample stream is independent of every other's.
inline std::uint64_t lambda_seed(std::uint64_t table_seed, std::size_t index) {
    return table_seed ^ static_cast<std::uint64_t>(index);
}

inline RecoveryTable build_table_from_grid(std::vector<double> lambda_grid,
                                           std::vector<double> t_past_grid, int sample_count,
                                           std::uint64_t seed,
                                           DecisionRule rule = DecisionRule::median,
                                           unsigned threads = 0) {
    if (lambda_grid.empty()) throw std::invalid_argument("build_table: empty lambda grid");
    if (t_past_grid.empty()) throw std::invalid_argument("build_table: empty t_past grid");
    for (std::size_t i = 0; i + 1 < t_past_grid.size(); ++i)
        if (!(t_past_grid[i] < t_past_grid[i + 1]))
            throw std::invalid_argument("build_table: t_past grid must be strictly increasing");
    if (t_past_grid.front() < 0.0)
        throw std::invalid_argument("build_table: t_past grid must be non-negative");

    RecoveryTable table;
    table.lambda_grid = std::move(lambda_grid);
    table.t_past_grid = std::move(t_past_grid);
    table.sample_count = sample_count;
    table.seed = seed;
    table.rule = rule;
    const std::size_t nl = table.lambda_grid.size();
    const std::size_t nt = table.t_past_grid.size();
    table.predictions.assign(nl * nt, std::numeric_limits<double>::quiet_NaN());
    table.prior_medians.assign(nl, 0.0);
    table.prior_means.assign(nl, 0.0);

    auto fill_row = [&](std::size_t li) {
        const SampledPrior prior = sample_poisson_prior(
            table.lambda_grid[li], sample_count, lambda_seed(seed, li));
        table.prior_medians[li] = prior.median();
        table.prior_means[li] = prior.mean();
        for (std::size_t ti = 0; ti < nt; ++ti) {
            try {
                table.predictions[table.index(li, ti)] =
                    predict(prior, table.t_past_grid[ti], 1, rule);
            } catch (const empty_posterior_error&) {
                // infeasible cell, already NaN
            }
        }
    };

    unsigned n_threads = threads ? threads : std::thread::hardware_concurrency();
    if (n_threads <= 1 || nl < 2) {
        for (std::size_t li = 0; li < nl; ++li) fill_row(li);
    } else {
        n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(nl));
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (unsigned w = 0; w < n_threads; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t li = w; li < nl; li += n_threads) fill_row(li);
            });
        }
        for (auto& t : pool) t.join();
    }
    return table;
}

inline RecoveryTable build_table(double lambda_min, double lambda_max, double lambda_step,
                                 std::vector<double> t_past_grid, int sample_count,
                                 std::uint64_t seed, DecisionRule rule = DecisionRule::median,
                                 unsigned threads = 0) {
    return build_table_from_grid(make_lambda_grid(lambda_min, lambda_max, lambda_step),
                                 std::move(t_past_grid), sample_count, seed, rule, threads);
}

/// Best-candidate prior for one observed (t_past, t_predicted) pair.
struct RecoveredPrior {
    double lambda = 0.0;
    std::size_t lambda_index = 0;
    double prior_median = 0.0;
    double match_error = 0.0;
    double observed_t_past = 0.0;
    double observed_t_predicted = 0.0;
};

/// Scans the t_past column for the entry nearest the observed prediction.
/// Ties break toward smaller lambda; infeasible cells are skipped.
inline RecoveredPrior recover_prior(const RecoveryTable& table, double t_past,
                                    double observed_t_predicted) {
    const std::size_t ti = table.snap_t_past(t_past);
    std::optional<std::size_t> best;
    double best_err = std::numeric_limits<double>::infinity();
    for (std::size_t li = 0; li < table.lambda_grid.size(); ++li) {
        const double e = table.entry(li, ti);
        if (!std::isfinite(e)) continue;
        const double err = std::abs(e - observed_t_predicted);
        if (err < best_err) {
            best_err = err;
            best = li;
        }
    }
    if (!best)
        throw no_candidate_error("recover_prior: every lambda is infeasible at t_past=" +
                                 std::to_string(table.t_past_grid[ti]));
    RecoveredPrior out;
    out.lambda = table.lambda_grid[*best];
    out.lambda_index = *best;
    out.prior_median = table.prior_medians[*best];
    out.match_error = best_err;
    out.observed_t_past = t_past;
    out.observed_t_predicted = observed_t_predicted;
    return out;
}

/// Element-wise recovery; a failed element is left empty instead of
/// aborting the batch. No smoothing across predictions.
inline std::vector<std::optional<RecoveredPrior>> recover_trajectory(
    const RecoveryTable& table, const std::vector<std::pair<double, double>>& predictions) {
    std::vector<std::optional<RecoveredPrior>> out;
    out.reserve(predictions.size());
    for (const auto& [t_past, t_pred] : predictions) {
        try {
            out.push_back(recover_prior(table, t_past, t_pred));
        } catch (const no_candidate_error&) {
            out.push_back(std::nullopt);
        }
    }
    return out;
}

namespace detail {

inline std::string fmt_full(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_grid_line(std::ostream& os, const char* name, const std::vector<double>& vs) {
    os << name;
    for (double v : vs) os << ' ' << fmt_full(v);
    os << '\n';
}

}  // namespace detail

/// Self-describing text serialization: build parameters plus the dense grid,
/// one lambda row per line. Doubles use round-trip precision; infeasible
/// cells are written as "x".
inline void save_table(const RecoveryTable& table, std::ostream& os) {
    os << "durcast-table 1\n";
    os << "rule " << to_string(table.rule) << '\n';
    os << "sample_count " << table.sample_count << '\n';
    os << "seed " << table.seed << '\n';
    os << "lambda_count " << table.lambda_grid.size() << '\n';
    detail::write_grid_line(os, "lambda_grid", table.lambda_grid);
    os << "t_past_count " << table.t_past_grid.size() << '\n';
    detail::write_grid_line(os, "t_past_grid", table.t_past_grid);
    detail::write_grid_line(os, "prior_medians", table.prior_medians);
    detail::write_grid_line(os, "prior_means", table.prior_means);
    for (std::size_t li = 0; li < table.lambda_grid.size(); ++li) {
        os << "row";
        for (std::size_t ti = 0; ti < table.t_past_grid.size(); ++ti) {
            const double e = table.entry(li, ti);
            os << ' ';
            if (std::isfinite(e))
                os << detail::fmt_full(e);
            else
                os << 'x';
        }
        os << '\n';
    }
}

namespace detail {

inline void expect_token(std::istream& is, const char* want) {
    std::string tok;
    if (!(is >> tok) || tok != want)
        throw parse_error(std::string("recovery table: expected '") + want + "', got '" + tok + "'");
}

inline std::vector<double> read_grid_line(std::istream& is, const char* name, std::size_t n) {
    expect_token(is, name);
    std::vector<double> vs(n);
    for (double& v : vs)
        if (!(is >> v)) throw parse_error(std::string("recovery table: bad ") + name);
    return vs;
}

}  // namespace detail

inline RecoveryTable load_table(std::istream& is) {
    detail::expect_token(is, "durcast-table");
    int version = 0;
    if (!(is >> version) || version != 1)
        throw parse_error("recovery table: unsupported version");
    RecoveryTable table;
    std::string tok;
    detail::expect_token(is, "rule");
    is >> tok;
    table.rule = decision_rule_from_string(tok);
    detail::expect_token(is, "sample_count");
    if (!(is >> table.sample_count)) throw parse_error("recovery table: bad sample_count");
    detail::expect_token(is, "seed");
    if (!(is >> table.seed)) throw parse_error("recovery table: bad seed");
    detail::expect_token(is, "lambda_count");
    std::size_t nl = 0;
    if (!(is >> nl) || nl == 0) throw parse_error("recovery table: bad lambda_count");
    table.lambda_grid = detail::read_grid_line(is, "lambda_grid", nl);
    detail::expect_token(is, "t_past_count");
    std::size_t nt = 0;
    if (!(is >> nt) || nt == 0) throw parse_error("recovery table: bad t_past_count");
    table.t_past_grid = detail::read_grid_line(is, "t_past_grid", nt);
    table.prior_medians = detail::read_grid_line(is, "prior_medians", nl);
    table.prior_means = detail::read_grid_line(is, "prior_means", nl);
    table.predictions.assign(nl * nt, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t li = 0; li < nl; ++li) {
        detail::expect_token(is, "row");
        for (std::size_t ti = 0; ti < nt; ++ti) {
            if (!(is >> tok)) throw parse_error("recovery table: truncated row");
            if (tok != "x") {
                try {
                    table.predictions[table.index(li, ti)] = std::stod(tok);
                } catch (const std::exception&) {
                    throw parse_error("recovery table: bad entry '" + tok + "'");
                }
            }
        }
    }
    return table;
}

}  // namespace durcast

#endif
