#ifndef DURCAST_RANDOM_HPP
#define DURCAST_RANDOM_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace durcast {

/// Uniform draw in the open interval (0,1) with 53 significant bits.
/// Built directly on the raw engine output so that the stream is fully
/// specified by the seed (std::generate_canonical is not portable).
inline double canonical_open(std::mt19937_64& engine) {
    return (static_cast<double>(engine() >> 11) + 0.5) * 0x1.0p-53;
}

/// Cumulative Poisson probabilities P(X <= k), k = 0..K, extended until the
/// tail mass is below 1e-16. Terms accumulate by the standard recurrence.
inline std::vector<double> poisson_cdf(double lambda) {
    double p = std::exp(-lambda);
    std::vector<double> cum{p};
    const int kmax = static_cast<int>(lambda + 60.0 * std::sqrt(lambda) + 20.0);
    int k = 0;
    while (cum.back() < 1.0 - 1e-16 && k < kmax) {
        ++k;
        p = p * lambda / k;
        cum.push_back(cum.back() + p);
    }
    return cum;
}

/// Inverse-CDF Poisson draw: smallest k with CDF(k) >= u.
inline int poisson_draw(std::mt19937_64& engine, const std::vector<double>& cdf) {
    const double u = canonical_open(engine);
    auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    return static_cast<int>(it - cdf.begin());
}

}  // namespace durcast

#endif
