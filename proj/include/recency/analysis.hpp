#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "recency/mrp.hpp"
#include "recency/return_spec.hpp"

namespace recency {

/// The variance bound only applies to convex returns.
class NonConvexSpec : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct VarianceOptions {
    std::size_t samples = 100'000;
    std::size_t horizon = 200;  ///< TD errors delta_0 .. delta_{horizon-1} enter kappa
    std::uint64_t seed = 0;
    double slack = 0.05;
    std::size_t max_horizon = 100'000;  ///< episode cap for return samples
};

struct VarianceReport {
    std::string spec;
    StateIndex state = 0;
    double empirical_variance = 0.0;
    double bound = 0.0;
    double kappa = 0.0;
    double modulus = 0.0;
    std::size_t samples = 0;
    bool satisfied = false;
};

/// Largest entry of the sample covariance matrix (n - 1 denominator) of
/// (delta_0, ..., delta_{horizon-1}) over trajectories from `s`. TD errors
/// after termination are zero. Sample j uses stream derive_seed(seed, j).
double estimate_kappa(const Mrp& m, const ValueFunction& v, StateIndex s, std::size_t horizon,
                      std::size_t samples, std::uint64_t seed);

/// Unbiased sample variance of the estimator's target from `s` over
/// independent episodes.
double estimate_return_variance(const Mrp& m, const ReturnSpec& spec, const ValueFunction& v, StateIndex s,
                                std::size_t samples, std::uint64_t seed,
                                std::size_t max_horizon = 100'000);

/// Compares the empirical variance against ((1 - beta) / (1 - gamma))^2 kappa.
/// Throws NonConvexSpec when the estimator is not a convex return.
VarianceReport check_bound(const Mrp& m, const ReturnSpec& spec, const ValueFunction& v, StateIndex s,
                           const VarianceOptions& options = {});

/// Same check with a precomputed kappa (kappa depends on v and s, not on the
/// estimator).
VarianceReport check_bound_with_kappa(const Mrp& m, const ReturnSpec& spec, const ValueFunction& v,
                                      StateIndex s, double kappa, const VarianceOptions& options = {});

/// "spec,state,var,bound,kappa,samples,satisfied"
void write_variance_csv(std::ostream& out, const std::vector<VarianceReport>& reports);

}  // namespace recency
