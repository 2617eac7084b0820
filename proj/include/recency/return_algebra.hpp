#pragma once

#include "recency/return_spec.hpp"
#include "recency/weights.hpp"

namespace recency {

/// Default comparison tolerance for classification and condition checks.
inline constexpr double kDefaultTolerance = 1e-9;

/// n-step weights c_n = h_{n-1} - h_n (n >= 1) of TD-error weights h. The
/// analytic tail is carried over exactly. Throws std::domain_error when h does
/// not vanish and std::invalid_argument when h is not indexed from 0.
WeightSeq h_to_c(const WeightSeq& h);

/// TD-error weights h_i = sum_{n > i} c_n of n-step weights c (indexed from 1).
WeightSeq c_to_h(const WeightSeq& c);

/// Position of an estimator in the linear > affine > convex > {compound, n-step}
/// hierarchy, plus both recency checks.
struct Classification {
    bool is_linear = true;
    bool is_affine = false;
    bool is_convex = false;
    bool is_compound = false;
    bool is_nstep = false;
    bool weak_recency = false;
    bool strong_recency = false;
    double weight_sum = 0.0;  ///< sum of c_n
    double modulus = 0.0;     ///< contraction modulus at the given discount
};

Classification classify(const WeightSeq& h, double gamma, double eps = kDefaultTolerance);

/// Weak recency: h_i >= h_{i+1} - eps and h_i >= -eps for every i.
bool weak_recency(const WeightSeq& h, double eps = kDefaultTolerance);

/// Strong recency with the tail judged analytically: every prefix step drops
/// by more than eps and stays above eps, and the tail is a strictly decreasing
/// positive geometric sequence with ratio in (eps, 1 - eps). Sequences with a
/// zero tail never qualify.
bool strong_recency(const WeightSeq& h, double eps = kDefaultTolerance);

/// |1 - sum c_n| + sum |c_n| gamma^n.
double contraction_modulus(const WeightSeq& c, double gamma);

/// Closed-form modulus for the lambda, n-step, sparse and truncated families.
/// Throws SpecError for other families.
double modulus_closed_form(const ReturnSpec& spec, double gamma);

/// ((1 - beta) / (1 - gamma))^2 * kappa: worst-case conditional variance of a
/// convex return with modulus beta.
double variance_bound(double beta, double gamma, double kappa);

}  // namespace recency
