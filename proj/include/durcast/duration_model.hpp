#ifndef DURCAST_DURATION_MODEL_HPP
#define DURCAST_DURATION_MODEL_HPP

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "durcast/errors.hpp"
#include "durcast/random.hpp"

namespace durcast {

/// Which posterior summary stands in for the decision.
enum class DecisionRule { median, mean };

inline std::string to_string(DecisionRule r) {
    return r == DecisionRule::median ? "median" : "mean";
}

inline DecisionRule decision_rule_from_string(const std::string& s) {
    if (s == "median") return DecisionRule::median;
    if (s == "mean") return DecisionRule::mean;
    throw std::invalid_argument("unknown decision rule '" + s + "'");
}

/// Smallest support value whose cumulative mass reaches 0.5.
/// Support must be ascending and probabilities normalized.
inline double pmf_median(const std::vector<double>& support, const std::vector<double>& probs) {
    double cum = 0.0;
    for (std::size_t i = 0; i < support.size(); ++i) {
        cum += probs[i];
        if (cum >= 0.5) return support[i];
    }
    return support.back();
}

inline double pmf_mean(const std::vector<double>& support, const std::vector<double>& probs) {
    double acc = 0.0;
    for (std::size_t i = 0; i < support.size(); ++i) acc += support[i] * probs[i];
    return acc;
}

/// Empirical pmf over event durations, built from Poisson draws.
/// Support holds the distinct drawn values in ascending order; each
/// probability is (draws equal to k) / sample_count.
struct SampledPrior {
    double lambda = 0.0;
    int sample_count = 0;
    std::uint64_t seed = 0;
    std::vector<double> support;
    std::vector<double> probs;

    double median() const { return pmf_median(support, probs); }
    double mean() const { return pmf_mean(support, probs); }
    double max_support() const { return support.back(); }
};

inline SampledPrior sample_poisson_prior(double lambda, int sample_count, std::uint64_t seed) {
    if (!(lambda > 0.0))
        throw std::invalid_argument("sample_poisson_prior: lambda must be positive");
    if (sample_count < 1)
        throw std::invalid_argument("sample_poisson_prior: sample_count must be positive");

    std::mt19937_64 engine(seed);
    const std::vector<double> cdf = poisson_cdf(lambda);
    std::map<int, int> counts;
    for (int i = 0; i < sample_count; ++i) ++counts[poisson_draw(engine, cdf)];

    SampledPrior prior;
    prior.lambda = lambda;
    prior.sample_count = sample_count;
    prior.seed = seed;
    prior.support.reserve(counts.size());
    prior.probs.reserve(counts.size());
    for (const auto& [k, c] : counts) {
        prior.support.push_back(static_cast<double>(k));
        prior.probs.push_back(static_cast<double>(c) / sample_count);
    }
    return prior;
}

/// Elapsed duration at decision time plus the observation-count exponent of
/// the likelihood (1/t_total)^n.
struct LikelihoodSpec {
    double t_past = 0.0;
    int n_observations = 1;

    LikelihoodSpec(double t_past_, int n_observations_)
        : t_past(t_past_), n_observations(n_observations_) {
        if (t_past < 0.0)
            throw std::invalid_argument("LikelihoodSpec: t_past must be non-negative");
        if (n_observations < 1)
            throw std::invalid_argument("LikelihoodSpec: n_observations must be >= 1");
    }
};

struct PosteriorResult {
    std::vector<double> support;
    std::vector<double> probs;
    double median = 0.0;
    double mean = 0.0;
    DecisionRule decision_rule_used = DecisionRule::median;
};

/// Reweights the prior by the truncated likelihood (1/t_total)^n for
/// t_total >= t_past and renormalizes. t_total = 0 carries zero likelihood:
/// a zero-duration event cannot be observed in progress.
inline PosteriorResult posterior(const SampledPrior& prior, const LikelihoodSpec& likelihood,
                                 DecisionRule rule = DecisionRule::median) {
    PosteriorResult result;
    result.decision_rule_used = rule;
    double total = 0.0;
    for (std::size_t i = 0; i < prior.support.size(); ++i) {
        const double t = prior.support[i];
        if (t < likelihood.t_past || t <= 0.0) continue;
        double w = prior.probs[i];
        for (int k = 0; k < likelihood.n_observations; ++k) w /= t;
        result.support.push_back(t);
        result.probs.push_back(w);
        total += w;
    }
    if (result.support.empty() || total <= 0.0)
        throw empty_posterior_error("posterior: no prior mass at or above t_past=" +
                                    std::to_string(likelihood.t_past));
    for (double& p : result.probs) p /= total;
    result.median = pmf_median(result.support, result.probs);
    result.mean = pmf_mean(result.support, result.probs);
    return result;
}

/// The decision output t_predicted: the chosen posterior summary.
inline double predict(const SampledPrior& prior, double t_past, int n_observations,
                      DecisionRule rule = DecisionRule::median) {
    const PosteriorResult post = posterior(prior, LikelihoodSpec(t_past, n_observations), rule);
    return rule == DecisionRule::median ? post.median : post.mean;
}

}  // namespace durcast

#endif
