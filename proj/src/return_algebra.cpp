#include "recency/return_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <variant>

namespace recency {

namespace {

// Entries past the prefix scale by ratio^q <= 1, so a per-entry comparison
// against a fixed tolerance only needs the first tail period. Enumeration
// windows are capped to keep pathological tolerances bounded.
constexpr std::size_t kWindowCap = 1u << 22;

std::size_t window(const WeightSeq& w, double eps) {
    return std::min(w.support_bound(eps), w.first_index() + kWindowCap);
}

/// Tail pattern of the first difference t(j) - t(j+1) of a periodic tail.
std::vector<double> difference_pattern(const WeightSeq& w) {
    const auto p = w.pattern();
    std::vector<double> out(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) {
        const double next = k + 1 < p.size() ? p[k + 1] : w.ratio() * p[0];
        out[k] = p[k] - next;
    }
    return out;
}

}  // namespace

WeightSeq h_to_c(const WeightSeq& h) {
    if (h.first_index() != 0) throw std::invalid_argument("h must be indexed from 0");
    if (!h.vanishes()) throw std::domain_error("h does not vanish; n-step weights are undefined");
    const auto prefix = h.prefix();
    std::vector<double> c(prefix.size());
    for (std::size_t n = 1; n <= prefix.size(); ++n) c[n - 1] = h[n - 1] - h[n];
    if (h.period() == 0) return WeightSeq::finite(std::move(c), 1);
    return WeightSeq::periodic(std::move(c), h.ratio(), difference_pattern(h), 1);
}

WeightSeq c_to_h(const WeightSeq& c) {
    if (c.first_index() != 1) throw std::invalid_argument("c must be indexed from 1");
    if (!c.vanishes()) throw std::domain_error("c is not summable");
    // Tail partial sums S(j) = sum_{j' >= j} t(j') satisfy S(j + P) = ratio * S(j).
    const auto pattern = c.pattern();
    std::vector<double> tail_sums(pattern.size());
    double tail_total = 0.0;
    if (!pattern.empty()) {
        double period_sum = 0.0;
        for (double x : pattern) period_sum += x;
        tail_total = period_sum / (1.0 - c.ratio());
        double running = tail_total;
        for (std::size_t k = 0; k < pattern.size(); ++k) {
            tail_sums[k] = running;
            running -= pattern[k];
        }
    }
    const auto prefix = c.prefix();
    std::vector<double> h(prefix.size());
    double acc = tail_total;
    for (std::size_t i = prefix.size(); i-- > 0;) {
        acc += prefix[i];
        h[i] = acc;
    }
    if (pattern.empty()) return WeightSeq::finite(std::move(h), 0);
    return WeightSeq::periodic(std::move(h), c.ratio(), std::move(tail_sums), 0);
}

bool weak_recency(const WeightSeq& h, double eps) {
    if (h.min_entry() < -eps) return false;
    const auto prefix = h.prefix();
    const std::size_t first = h.first_index();
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        if (h[first + i] < h[first + i + 1] - eps) return false;
    }
    for (double d : difference_pattern(h)) {
        if (d < -eps) return false;
    }
    return true;
}

bool strong_recency(const WeightSeq& h, double eps) {
    if (h.period() == 0) return false;
    const auto prefix = h.prefix();
    const std::size_t first = h.first_index();
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        const double cur = h[first + i];
        const double next = h[first + i + 1];
        if (!(cur - next > eps && next > eps)) return false;
    }
    if (!(h.ratio() > eps && h.ratio() < 1.0 - eps)) return false;
    for (double p : h.pattern()) {
        if (!(p > eps)) return false;
    }
    for (double d : difference_pattern(h)) {
        if (!(d > eps)) return false;
    }
    return true;
}

double contraction_modulus(const WeightSeq& c, double gamma) {
    if (c.first_index() != 1) throw std::invalid_argument("c must be indexed from 1");
    return std::abs(1.0 - c.sum()) + c.discounted_abs_sum(gamma);
}

Classification classify(const WeightSeq& h, double gamma, double eps) {
    const WeightSeq c = h_to_c(h);
    Classification out;
    out.weight_sum = c.sum();
    out.modulus = contraction_modulus(c, gamma);
    out.is_affine = std::abs(out.weight_sum - 1.0) <= eps && out.modulus < 1.0;
    out.is_convex = out.is_affine && c.min_entry() >= -eps;

    if (out.is_convex) {
        const std::size_t end = window(c, eps);
        std::size_t positive = 0;
        std::size_t near_one = 0;
        bool others_near_zero = true;
        for (std::size_t n = 1; n < end; ++n) {
            const double cn = c[n];
            if (cn > eps) ++positive;
            if (std::abs(cn - 1.0) <= eps) {
                ++near_one;
            } else if (std::abs(cn) > eps) {
                others_near_zero = false;
            }
        }
        out.is_compound = positive >= 2;
        out.is_nstep = near_one == 1 && others_near_zero;
    }
    out.weak_recency = weak_recency(h, eps);
    out.strong_recency = strong_recency(h, eps);
    return out;
}

double modulus_closed_form(const ReturnSpec& spec, double gamma) {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("discount must lie in [0, 1)");
    validate_spec(spec);
    auto lambda_modulus = [gamma](double lambda) { return gamma * (1.0 - lambda) / (1.0 - gamma * lambda); };
    if (const auto* s = std::get_if<LambdaReturn>(&spec)) return lambda_modulus(s->lambda);
    if (const auto* s = std::get_if<NStepReturn>(&spec)) return std::pow(gamma, s->n);
    if (const auto* s = std::get_if<SparseLambdaReturn>(&spec)) {
        return gamma * (1.0 - s->lambda) / (1.0 - std::pow(gamma, s->m) * s->lambda);
    }
    if (const auto* s = std::get_if<TruncatedLambdaReturn>(&spec)) {
        if (!s->horizon) return lambda_modulus(s->lambda);
        const double gl = gamma * s->lambda;
        return ((1.0 - gamma) * std::pow(gl, *s->horizon) + gamma * (1.0 - s->lambda)) / (1.0 - gl);
    }
    throw SpecError("no closed-form modulus for " + spec_label(spec) + "; use contraction_modulus");
}

double variance_bound(double beta, double gamma, double kappa) {
    if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("modulus must lie in [0, 1]");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("discount must lie in [0, 1)");
    if (!(kappa >= 0.0)) throw std::invalid_argument("kappa must be nonnegative");
    const double scale = (1.0 - beta) / (1.0 - gamma);
    return scale * scale * kappa;
}

}  // namespace recency
