#include "recency/operator_engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "recency/rng.hpp"

namespace recency {

namespace {

Matrix matrix_power(const Matrix& base, std::size_t exponent) {
    Matrix out = Matrix::Identity(base.rows(), base.cols());
    for (std::size_t k = 0; k < exponent; ++k) out = out * base;
    return out;
}

void check_values(const Mrp& m, const ValueFunction& v) {
    if (static_cast<std::size_t>(v.size()) != m.n_states()) {
        throw MrpError(MrpError::Kind::SizeMismatch, "value function size does not match the MRP");
    }
}

}  // namespace

ExpectedOperator::ExpectedOperator(const Mrp& m, WeightSeq h) : mrp_(m), h_(std::move(h)) {
    if (h_.first_index() != 0) throw std::invalid_argument("TD-error weights must be indexed from 0");
    step_ = m.discount * m.transition;
    if (h_.period() > 0) {
        const auto n = step_.rows();
        tail_solver_.emplace(Matrix::Identity(n, n) - h_.ratio() * matrix_power(step_, h_.period()));
    }
}

ValueFunction ExpectedOperator::apply(const ValueFunction& v) const {
    check_values(mrp_, v);
    const ValueFunction masked = mask_terminal(mrp_, v);
    Vector term = bellman_apply(mrp_, masked) - masked;  // (gamma P)^i (T v - v)
    Vector acc = Vector::Zero(masked.size());
    for (double weight : h_.prefix()) {
        acc += weight * term;
        term = step_ * term;
    }
    if (tail_solver_) {
        Vector x = tail_solver_->solve(term);
        for (double weight : h_.pattern()) {
            acc += weight * x;
            x = step_ * x;
        }
    }
    return mask_terminal(mrp_, masked + acc);
}

ValueFunction apply_operator(const Mrp& m, const WeightSeq& h, const ValueFunction& v) {
    return ExpectedOperator(m, h).apply(v);
}

ValueFunction apply_operator_nstep_form(const Mrp& m, const WeightSeq& c, const ValueFunction& v) {
    if (c.first_index() != 1) throw std::invalid_argument("n-step weights must be indexed from 1");
    check_values(m, v);
    const ValueFunction masked = mask_terminal(m, v);
    ValueFunction out = (1.0 - c.sum()) * masked;
    ValueFunction powered = masked;  // T^n v
    for (double weight : c.prefix()) {
        powered = bellman_apply(m, powered);
        out += weight * powered;
    }
    if (c.period() > 0) {
        // sum over the tail of c_n T^n v = (sum c_tail) v_pi + sum c_n (gamma P)^n (v - v_pi)
        const ValueFunction v_pi = exact_values(m);
        const Matrix step = m.discount * m.transition;
        const auto n = step.rows();
        const std::size_t tail_start = c.tail_start();
        Vector offset = matrix_power(step, tail_start) * (masked - v_pi);
        const Matrix system = Matrix::Identity(n, n) - c.ratio() * matrix_power(step, c.period());
        Vector x = system.partialPivLu().solve(offset);
        double tail_sum = 0.0;
        for (double weight : c.pattern()) {
            out += weight * x;
            x = step * x;
            tail_sum += weight;
        }
        out += tail_sum / (1.0 - c.ratio()) * v_pi;
    }
    return mask_terminal(m, out);
}

const char* to_string(Verdict v) noexcept {
    switch (v) {
        case Verdict::Converged: return "converged";
        case Verdict::Diverged: return "diverged";
        case Verdict::Exhausted: return "exhausted";
    }
    return "unknown";
}

IterationTrace iterate(const Mrp& m, const WeightSeq& h, const ValueFunction& v0, const IterateOptions& options) {
    if (!(options.step > 0.0 && options.step <= 1.0)) throw std::invalid_argument("step must lie in (0, 1]");
    if (!(options.conv_tol >= 0.0) || !(options.div_threshold > options.conv_tol)) {
        throw std::invalid_argument("need 0 <= conv_tol < div_threshold");
    }
    const ExpectedOperator op(m, h);
    const ValueFunction v_pi = exact_values(m);

    IterationTrace trace;
    trace.conv_tol = options.conv_tol;
    trace.div_threshold = options.div_threshold;
    ValueFunction v = mask_terminal(m, v0);
    auto record = [&](std::size_t k) {
        const double dist = (v - v_pi).lpNorm<Eigen::Infinity>();
        trace.records.push_back({k, v, dist});
        if (dist <= options.conv_tol) {
            trace.verdict = Verdict::Converged;
            return true;
        }
        if (dist >= options.div_threshold || !std::isfinite(dist)) {
            trace.verdict = Verdict::Diverged;
            return true;
        }
        return false;
    };
    if (record(0)) return trace;
    for (std::size_t k = 1; k <= options.max_iters; ++k) {
        v = v + options.step * (op.apply(v) - v);
        if (record(k)) return trace;
    }
    trace.verdict = Verdict::Exhausted;
    return trace;
}

std::vector<FieldRow> update_field(const Mrp& m, const WeightSeq& h, const Grid& grid) {
    if (m.n_states() != 2 || m.terminal[0] || m.terminal[1]) {
        throw std::invalid_argument("update field needs exactly two non-terminal states");
    }
    if (grid.points < 1 || !(grid.min <= grid.max) || !std::isfinite(grid.min) || !std::isfinite(grid.max)) {
        throw std::invalid_argument("invalid grid");
    }
    const ExpectedOperator op(m, h);
    auto coord = [&](std::size_t k) {
        if (grid.points == 1) return grid.min;
        return grid.min + (grid.max - grid.min) * static_cast<double>(k) / static_cast<double>(grid.points - 1);
    };
    std::vector<FieldRow> rows;
    rows.reserve(grid.points * grid.points);
    for (std::size_t a = 0; a < grid.points; ++a) {
        for (std::size_t b = 0; b < grid.points; ++b) {
            ValueFunction v(2);
            v << coord(a), coord(b);
            const Vector d = op.apply(v) - v;
            const double norm = d.norm();
            FieldRow row{v(0), v(1), 0.0, 0.0};
            if (norm >= 1e-12) {
                row.d1 = d(0) / norm;
                row.d2 = d(1) / norm;
            }
            rows.push_back(row);
        }
    }
    return rows;
}

double empirical_modulus(const Mrp& m, const WeightSeq& h, std::size_t pairs, std::uint64_t seed) {
    if (pairs == 0) throw std::invalid_argument("need at least one pair");
    const ExpectedOperator op(m, h);
    const auto n = static_cast<Eigen::Index>(m.n_states());
    double best = 0.0;
    for (std::size_t k = 0; k < pairs; ++k) {
        Rng rng(derive_seed(seed, k));
        ValueFunction a(n), b(n);
        for (Eigen::Index s = 0; s < n; ++s) a(s) = rng.uniform(-1.0, 1.0);
        for (Eigen::Index s = 0; s < n; ++s) b(s) = rng.uniform(-1.0, 1.0);
        a = mask_terminal(m, a);
        b = mask_terminal(m, b);
        const double denom = (a - b).lpNorm<Eigen::Infinity>();
        if (denom == 0.0) continue;
        best = std::max(best, (op.apply(a) - op.apply(b)).lpNorm<Eigen::Infinity>() / denom);
    }
    return best;
}

}  // namespace recency
