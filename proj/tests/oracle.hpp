#pragma once

// Independent reference computations for the tests. Nothing here calls the
// library's closed forms: sums are brute-forced term by term and weights are
// written down from their textbook definitions.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "recency/mrp.hpp"

namespace oracle {

using recency::Matrix;
using recency::Mrp;
using recency::ValueFunction;
using recency::Vector;

inline std::mt19937_64 rng_for(std::uint64_t seed) { return std::mt19937_64(seed * 7919 + 17); }

inline double uniform(std::mt19937_64& g, double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(g);
}

/// Random MRP with `n` non-terminal states, optionally one absorbing terminal
/// at the last index that every row can reach.
inline Mrp random_mrp(std::mt19937_64& g, int n, double gamma, bool with_terminal) {
    const int total = n + (with_terminal ? 1 : 0);
    Mrp m;
    m.transition = Matrix::Zero(total, total);
    m.reward = Vector::Zero(total);
    m.discount = gamma;
    m.terminal.assign(static_cast<std::size_t>(total), false);
    for (int s = 0; s < n; ++s) {
        double row = 0.0;
        for (int k = 0; k < total; ++k) {
            // Sparse-ish rows exercise the zero-probability paths.
            const double w = uniform(g) < 0.25 ? 0.0 : uniform(g);
            m.transition(s, k) = w;
            row += w;
        }
        if (row == 0.0) {
            m.transition(s, s) = 1.0;
            row = 1.0;
        }
        m.transition.row(s) /= row;
        m.reward(s) = uniform(g, -1.0, 1.0);
    }
    if (with_terminal) {
        m.transition(n, n) = 1.0;
        m.terminal[static_cast<std::size_t>(n)] = true;
    }
    return m;
}

inline ValueFunction random_values(std::mt19937_64& g, const Mrp& m, double scale = 1.0) {
    ValueFunction v(static_cast<Eigen::Index>(m.n_states()));
    for (Eigen::Index s = 0; s < v.size(); ++s) v(s) = m.terminal[static_cast<std::size_t>(s)] ? 0.0 : uniform(g, -scale, scale);
    return v;
}

/// Fixed point by value iteration to machine precision.
inline ValueFunction value_iteration(const Mrp& m) {
    ValueFunction v = ValueFunction::Zero(static_cast<Eigen::Index>(m.n_states()));
    for (int k = 0; k < 200000; ++k) {
        ValueFunction next = m.reward + m.discount * m.transition * v;
        for (std::size_t s = 0; s < m.n_states(); ++s) {
            if (m.terminal[s]) next(static_cast<Eigen::Index>(s)) = 0.0;
        }
        const double change = (next - v).lpNorm<Eigen::Infinity>();
        v = next;
        if (change < 1e-15) break;
    }
    return v;
}

inline ValueFunction bellman(const Mrp& m, const ValueFunction& v) {
    ValueFunction out = m.reward + m.discount * m.transition * v;
    for (std::size_t s = 0; s < m.n_states(); ++s) {
        if (m.terminal[s]) out(static_cast<Eigen::Index>(s)) = 0.0;
    }
    return out;
}

/// v + sum_i h(i) (gamma P)^i (T v - v), summed term by term until the
/// discounted weights are negligible.
inline ValueFunction brute_operator(const Mrp& m, const std::function<double(std::size_t)>& h,
                                    const ValueFunction& v, std::size_t terms = 20000) {
    ValueFunction residual = bellman(m, v) - v;
    for (std::size_t s = 0; s < m.n_states(); ++s) {
        if (m.terminal[s]) residual(static_cast<Eigen::Index>(s)) = 0.0;
    }
    ValueFunction out = v;
    ValueFunction term = residual;
    for (std::size_t i = 0; i < terms; ++i) {
        out += h(i) * term;
        term = m.discount * m.transition * term;
        if (term.lpNorm<Eigen::Infinity>() < 1e-300) break;
    }
    return out;
}

/// c_n = h_{n-1} - h_n, n = 1..count.
inline std::vector<double> c_from_h(const std::function<double(std::size_t)>& h, std::size_t count) {
    std::vector<double> c(count + 1, 0.0);
    for (std::size_t n = 1; n <= count; ++n) c[n] = h(n - 1) - h(n);
    return c;
}

/// |1 - sum c| + sum |c_n| gamma^n over a long window.
inline double modulus_brute(const std::function<double(std::size_t)>& h, double gamma, std::size_t count = 20000) {
    double sum = 0.0;
    double abs_disc = 0.0;
    double g = 1.0;
    for (std::size_t n = 1; n <= count; ++n) {
        g *= gamma;
        const double c = h(n - 1) - h(n);
        sum += c;
        abs_disc += std::abs(c) * g;
    }
    return std::abs(1.0 - sum) + abs_disc;
}

inline double lambda_h(double lambda, std::size_t i) { return std::pow(lambda, static_cast<double>(i)); }

inline double sparse_h(double lambda, int m, std::size_t i) {
    return std::pow(lambda, std::floor((static_cast<double>(i) + m - 1) / m));
}

inline double trunc_h(double lambda, int horizon, std::size_t i) {
    return static_cast<int>(i) < horizon ? std::pow(lambda, static_cast<double>(i)) : 0.0;
}

}  // namespace oracle
