#ifndef DURCAST_SCENARIO_HPP
#define DURCAST_SCENARIO_HPP

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "durcast/duration_model.hpp"
#include "durcast/prior_recovery.hpp"

namespace durcast {

enum class ScenarioMode { invariant_prediction, invariant_prior };

/// One limiting-case run: hold the prediction fixed and recover the prior per
/// step, or hold the prior fixed and let the prediction move.
struct ScenarioConfig {
    ScenarioMode mode = ScenarioMode::invariant_prediction;
    double fixed_value = 0.0;            // held t_predicted, or held lambda
    std::vector<double> t_past_range;    // strictly increasing
    std::string unit = "days";
    DecisionRule rule = DecisionRule::median;
    const RecoveryTable* table = nullptr;  // invariant_prediction mode
    const SampledPrior* prior = nullptr;   // invariant_prior mode
};

struct TrajectoryPoint {
    double t_past = 0.0;
    double t_predicted = 0.0;
    double prior_summary = 0.0;  // expected value of the prior in play
    double prior_median = 0.0;
    double horizon = 0.0;        // t_predicted - t_past
};

struct Trajectory {
    std::vector<TrajectoryPoint> points;
    std::vector<double> infeasible_t_past;  // flagged, trajectory continued
    std::optional<double> truncated_at;     // first t_past past all prior support
    std::string unit;
};

namespace detail {

inline void check_range(const std::vector<double>& range) {
    if (range.empty())
        throw std::invalid_argument("scenario: empty t_past range");
    for (std::size_t i = 0; i + 1 < range.size(); ++i)
        if (!(range[i] < range[i + 1]))
            throw std::invalid_argument("scenario: t_past range must be strictly increasing");
}

}  // namespace detail

inline Trajectory run_invariant_prediction(const ScenarioConfig& config) {
    if (config.mode != ScenarioMode::invariant_prediction || config.table == nullptr)
        throw std::invalid_argument("run_invariant_prediction: needs mode + recovery table");
    detail::check_range(config.t_past_range);
    if (config.t_past_range.back() > config.fixed_value)
        throw std::invalid_argument("run_invariant_prediction: t_past must stay <= fixed prediction");

    Trajectory traj;
    traj.unit = config.unit;
    for (double t_past : config.t_past_range) {
        try {
            const RecoveredPrior rec = recover_prior(*config.table, t_past, config.fixed_value);
            traj.points.push_back({t_past, config.fixed_value,
                                   config.table->prior_means[rec.lambda_index],
                                   rec.prior_median, config.fixed_value - t_past});
        } catch (const no_candidate_error&) {
            traj.infeasible_t_past.push_back(t_past);
        }
    }
    return traj;
}

inline Trajectory run_invariant_prior(const ScenarioConfig& config) {
    if (config.mode != ScenarioMode::invariant_prior || config.prior == nullptr)
        throw std::invalid_argument("run_invariant_prior: needs mode + sampled prior");
    detail::check_range(config.t_past_range);

    Trajectory traj;
    traj.unit = config.unit;
    const double prior_mean = config.prior->mean();
    const double prior_median = config.prior->median();
    for (double t_past : config.t_past_range) {
        try {
            const double pred = predict(*config.prior, t_past, 1, config.rule);
            traj.points.push_back({t_past, pred, prior_mean, prior_median, pred - t_past});
        } catch (const empty_posterior_error&) {
            traj.truncated_at = t_past;
            break;
        }
    }
    return traj;
}

/// Plot-ready delimited text, one row per trajectory point. A leading
/// comment line carries the unit label; a trailing one marks truncation.
inline void write_trajectory_csv(const Trajectory& traj, std::ostream& os) {
    os << "# unit=" << traj.unit << '\n';
    os << "t_past,t_predicted,prior_mean,prior_median,horizon\n";
    char buf[160];
    for (const auto& p : traj.points) {
        std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g,%.10g,%.10g", p.t_past, p.t_predicted,
                      p.prior_summary, p.prior_median, p.horizon);
        os << buf << '\n';
    }
    for (double t : traj.infeasible_t_past) {
        std::snprintf(buf, sizeof(buf), "# infeasible t_past=%.10g", t);
        os << buf << '\n';
    }
    if (traj.truncated_at) {
        std::snprintf(buf, sizeof(buf), "# truncated at t_past=%.10g (posterior empty)",
                      *traj.truncated_at);
        os << buf << '\n';
    }
}

}  // namespace durcast

#endif
