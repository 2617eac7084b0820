#include "recency/offpolicy.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <sstream>
#include <stdexcept>

#include "recency/format.hpp"

namespace recency {

ConditionResult check_offpolicy_condition(const OffPolicyTrace& trace, double eps) {
    if (trace.h.size() != trace.rho.size()) throw std::invalid_argument("trace h and rho lengths differ");
    ConditionResult result;
    if (trace.h.empty()) return result;
    auto fail = [&](std::size_t i) {
        result.holds = false;
        result.first_violation = i;
        return result;
    };
    if (trace.h[0] < -eps) return fail(0);
    for (std::size_t i = 0; i + 1 < trace.h.size(); ++i) {
        const double next = trace.h[i + 1];
        if (trace.h[i] * trace.rho[i] < next - eps || next < -eps) return fail(i);
    }
    return result;
}

StateConditionResult check_state_dependent_recency(const StateWeights& weights, double eps) {
    StateConditionResult result;
    if (weights.empty()) return result;
    const std::size_t n = weights.front().size();
    for (const auto& table : weights) {
        if (table.size() != n || n == 0) throw std::invalid_argument("every weight table must cover all states");
        for (double w : table) {
            if (!std::isfinite(w)) throw std::invalid_argument("state weights must be finite");
        }
    }
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const auto& cur = weights[i];
        const auto lo = std::min_element(cur.begin(), cur.end());
        const auto lo_state = static_cast<std::size_t>(lo - cur.begin());
        if (*lo < -eps) {
            result.holds = false;
            result.first_violation = {i, lo_state, lo_state};
            return result;
        }
        if (i + 1 == weights.size()) break;
        const auto& next = weights[i + 1];
        const auto hi = std::max_element(next.begin(), next.end());
        if (*lo < *hi - eps) {
            result.holds = false;
            result.first_violation = {i, lo_state, static_cast<std::size_t>(hi - next.begin())};
            return result;
        }
    }
    return result;
}

HistoryRule retrace_rule(double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must lie in [0, 1]");
    return {1.0, [lambda](std::size_t, double h, double rho, std::span<const StateIndex>) {
                return h * lambda * std::min(1.0, rho);
            }};
}

HistoryRule importance_sampling_rule() {
    return {1.0, [](std::size_t, double h, double rho, std::span<const StateIndex>) { return h * rho; }};
}

HistoryRule time_rule(const WeightSeq& h) {
    return {h[0], [h](std::size_t i, double, double, std::span<const StateIndex>) { return h[i + 1]; }};
}

OffPolicyTrace realize_trace(const HistoryRule& rule, const Trajectory& traj,
                             std::span<const double> behavior_probs, std::span<const double> target_probs) {
    const std::size_t T = traj.length();
    if (behavior_probs.size() != T || target_probs.size() != T) {
        throw std::invalid_argument("need one behavior and one target probability per step");
    }
    if (!rule.next) throw std::invalid_argument("weighting rule has no update");
    std::vector<double> ratio(T);
    for (std::size_t j = 0; j < T; ++j) {
        if (!(behavior_probs[j] > 0.0)) throw std::invalid_argument("behavior probability must be positive");
        if (!(target_probs[j] >= 0.0)) throw std::invalid_argument("target probability must be nonnegative");
        ratio[j] = target_probs[j] / behavior_probs[j];
    }
    OffPolicyTrace trace;
    if (T == 0) return trace;
    trace.h.resize(T);
    trace.rho.resize(T);
    trace.h[0] = rule.initial;
    for (std::size_t i = 0; i + 1 < T; ++i) {
        trace.rho[i] = ratio[i + 1];
        const std::span<const StateIndex> history(traj.states.data(), i + 2);
        trace.h[i + 1] = rule.next(i, trace.h[i], ratio[i + 1], history);
    }
    trace.rho[T - 1] = 1.0;
    return trace;
}

OffPolicyTrace read_offpolicy_trace(std::istream& in) {
    OffPolicyTrace trace;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream fields(line);
        std::string a, b, extra;
        if (!(fields >> a)) continue;
        if (!(fields >> b) || (fields >> extra)) {
            throw std::invalid_argument("trace line " + std::to_string(lineno) + ": expected \"h rho\"");
        }
        const auto h = parse_double(a);
        const auto rho = parse_double(b);
        if (!h || !rho || !std::isfinite(*h) || !std::isfinite(*rho)) {
            throw std::invalid_argument("trace line " + std::to_string(lineno) + ": not a number");
        }
        if (*rho < 0.0) throw std::invalid_argument("trace line " + std::to_string(lineno) + ": negative ratio");
        trace.h.push_back(*h);
        trace.rho.push_back(*rho);
    }
    return trace;
}

}  // namespace recency
