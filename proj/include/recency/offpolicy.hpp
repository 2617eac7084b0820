#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "recency/mrp.hpp"
#include "recency/return_algebra.hpp"

namespace recency {

/// Realized trajectory-aware weights along one trajectory. Entry i pairs
/// h_i with the ratio it is compared through: rho[i] = rho_{t+i+1}. The last
/// rho entry has no successor weight and is not used by the condition.
struct OffPolicyTrace {
    std::vector<double> h;
    std::vector<double> rho;
};

struct ConditionResult {
    bool holds = true;
    std::optional<std::size_t> first_violation;  ///< smallest failing i
};

/// h_i rho_{i+1} >= h_{i+1} - eps and h_{i+1} >= -eps for every i (and
/// h_0 >= -eps, reported as index 0). An empty trace holds vacuously.
ConditionResult check_offpolicy_condition(const OffPolicyTrace& trace, double eps = kDefaultTolerance);

/// State-dependent weights: tables[i][s] = h_i(s).
using StateWeights = std::vector<std::vector<double>>;

struct StateConditionResult {
    bool holds = true;
    /// (i, s, s'): step i, the state minimizing h_i and the state maximizing
    /// h_{i+1}. For a negative weight, s = s' = the offending state.
    std::optional<std::array<std::size_t, 3>> first_violation;
};

/// min_s h_i(s) >= max_s' h_{i+1}(s') - eps and every weight >= -eps.
StateConditionResult check_state_dependent_recency(const StateWeights& weights, double eps = kDefaultTolerance);

/// Trajectory-aware weighting rule: h_0 = initial, and
/// h_{i+1} = next(i, h_i, rho_{i+1}, states S_t .. S_{t+i+1}).
struct HistoryRule {
    double initial = 1.0;
    std::function<double(std::size_t i, double h, double rho, std::span<const StateIndex> history)> next;
};

HistoryRule retrace_rule(double lambda);          ///< h_{i+1} = h_i lambda min(1, rho_{i+1})
HistoryRule importance_sampling_rule();           ///< h_{i+1} = h_i rho_{i+1}
HistoryRule time_rule(const WeightSeq& h);        ///< h_i from a fixed sequence

/// Materializes weights and ratios along `traj`. Probabilities are indexed by
/// time step (the probability of the action taken at step j); rho_j =
/// target_probs[j] / behavior_probs[j]. Throws std::invalid_argument on a
/// nonpositive behavior probability or a length mismatch.
OffPolicyTrace realize_trace(const HistoryRule& rule, const Trajectory& traj,
                             std::span<const double> behavior_probs, std::span<const double> target_probs);

/// Lines of "h rho" pairs.
OffPolicyTrace read_offpolicy_trace(std::istream& in);

}  // namespace recency
