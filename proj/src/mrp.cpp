#include "recency/mrp.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include "recency/rng.hpp"

namespace recency {

namespace {

constexpr double kRowTolerance = 1e-12;
constexpr double kRewardTolerance = 1e-12;

void check_size(const Mrp& m, const ValueFunction& v) {
    if (static_cast<std::size_t>(v.size()) != m.n_states()) {
        throw MrpError(MrpError::Kind::SizeMismatch,
                       "value function has " + std::to_string(v.size()) + " entries, MRP has " +
                           std::to_string(m.n_states()) + " states");
    }
}

}  // namespace

std::size_t Mrp::n_nonterminal() const noexcept {
    std::size_t count = 0;
    for (bool t : terminal) count += t ? 0 : 1;
    return count;
}

double Mrp::step_reward(StateIndex s, StateIndex next) const {
    if (transition_reward) return (*transition_reward)(s, next);
    return reward(s);
}

void validate_mrp(const Mrp& m) {
    const auto n = m.n_states();
    if (n == 0) throw MrpError(MrpError::Kind::SizeMismatch, "MRP has no states");
    if (static_cast<std::size_t>(m.transition.rows()) != n ||
        static_cast<std::size_t>(m.transition.cols()) != n || m.terminal.size() != n) {
        throw MrpError(MrpError::Kind::SizeMismatch, "transition/reward/terminal sizes disagree");
    }
    if (m.transition_reward && (static_cast<std::size_t>(m.transition_reward->rows()) != n ||
                                static_cast<std::size_t>(m.transition_reward->cols()) != n)) {
        throw MrpError(MrpError::Kind::SizeMismatch, "transition reward matrix has wrong shape");
    }
    if (!(m.discount >= 0.0 && m.discount < 1.0)) {
        throw MrpError(MrpError::Kind::BadDiscount,
                       "discount must lie in [0, 1), got " + std::to_string(m.discount));
    }
    for (std::size_t s = 0; s < n; ++s) {
        double sum = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double p = m.transition(s, k);
            if (!(p >= 0.0 && p <= 1.0)) {
                throw MrpError(MrpError::Kind::NegativeProbability,
                               "transition probability outside [0,1] in row " + std::to_string(s), s);
            }
            sum += p;
        }
        if (std::abs(sum - 1.0) > kRowTolerance) {
            std::ostringstream msg;
            msg << "row " << s << " sums to " << sum;
            throw MrpError(MrpError::Kind::NonStochasticRow, msg.str(), s);
        }
        if (m.terminal[s] && (m.transition(s, s) != 1.0 || m.reward(s) != 0.0)) {
            throw MrpError(MrpError::Kind::NonAbsorbingTerminal,
                           "terminal state " + std::to_string(s) + " must self-loop with zero reward", s);
        }
        if (m.transition_reward) {
            const double expected = m.transition.row(s).dot(m.transition_reward->row(s));
            if (std::abs(expected - m.reward(s)) > kRewardTolerance) {
                throw MrpError(MrpError::Kind::RewardMismatch,
                               "expected transition reward disagrees with state reward in state " +
                                   std::to_string(s),
                               s);
            }
        }
    }
}

ValueFunction mask_terminal(const Mrp& m, ValueFunction v) {
    for (std::size_t s = 0; s < m.n_states(); ++s) {
        if (m.terminal[s]) v(static_cast<Eigen::Index>(s)) = 0.0;
    }
    return v;
}

ValueFunction exact_values(const Mrp& m) {
    const auto n = static_cast<Eigen::Index>(m.n_states());
    const Matrix system = Matrix::Identity(n, n) - m.discount * m.transition;
    Eigen::PartialPivLU<Matrix> lu(system);
    ValueFunction v = mask_terminal(m, lu.solve(m.reward));
    const double residual = (system * v - m.reward).lpNorm<Eigen::Infinity>();
    if (!v.allFinite() || residual > 1e-10 * (1.0 + m.reward.lpNorm<Eigen::Infinity>())) {
        throw MrpError(MrpError::Kind::SingularSystem, "Bellman system solve failed");
    }
    return v;
}

ValueFunction bellman_apply(const Mrp& m, const ValueFunction& v) {
    check_size(m, v);
    ValueFunction masked = mask_terminal(m, v);
    return mask_terminal(m, m.reward + m.discount * (m.transition * masked));
}

ValueFunction n_step_apply(const Mrp& m, const ValueFunction& v, int n) {
    if (n < 1) throw MrpError(MrpError::Kind::InvalidArgument, "n-step operator needs n >= 1");
    ValueFunction out = bellman_apply(m, v);
    for (int k = 1; k < n; ++k) out = bellman_apply(m, out);
    return out;
}

Trajectory sample_trajectory(const Mrp& m, StateIndex start, std::uint64_t seed,
                             std::size_t max_horizon) {
    if (start >= m.n_states()) {
        throw MrpError(MrpError::Kind::InvalidArgument, "start state out of range", start);
    }
    if (m.terminal[start]) {
        throw MrpError(MrpError::Kind::InvalidArgument, "cannot start in a terminal state", start);
    }
    if (max_horizon == 0) throw MrpError(MrpError::Kind::InvalidArgument, "max_horizon must be >= 1");

    Rng rng(seed);
    Trajectory traj;
    traj.states.push_back(start);
    StateIndex s = start;
    const auto n = m.n_states();
    while (traj.length() < max_horizon) {
        const double u = rng.uniform();
        double cumulative = 0.0;
        StateIndex next = n;
        StateIndex last_reachable = n;
        for (StateIndex k = 0; k < n; ++k) {
            const double p = m.transition(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(k));
            if (p <= 0.0) continue;
            last_reachable = k;
            cumulative += p;
            if (u < cumulative) {
                next = k;
                break;
            }
        }
        // Rows summing to slightly under 1 can leave u unmatched.
        if (next == n) next = last_reachable;
        traj.rewards.push_back(m.step_reward(s, next));
        traj.states.push_back(next);
        s = next;
        if (m.terminal[s]) {
            traj.terminated = true;
            break;
        }
    }
    return traj;
}

double discounted_return(const Trajectory& traj, double discount) {
    double g = 0.0;
    for (std::size_t t = traj.length(); t-- > 0;) g = traj.rewards[t] + discount * g;
    return g;
}

Mrp make_random_walk(std::size_t n_states, double discount) {
    if (n_states == 0) throw MrpError(MrpError::Kind::InvalidArgument, "random walk needs >= 1 state");
    const auto total = static_cast<Eigen::Index>(n_states + 2);
    const Eigen::Index left = 0;
    const Eigen::Index right = total - 1;

    Mrp m;
    m.discount = discount;
    m.transition = Matrix::Zero(total, total);
    m.reward = Vector::Zero(total);
    m.terminal.assign(static_cast<std::size_t>(total), false);
    Matrix step_reward = Matrix::Zero(total, total);

    m.transition(left, left) = 1.0;
    m.transition(right, right) = 1.0;
    m.terminal[static_cast<std::size_t>(left)] = true;
    m.terminal[static_cast<std::size_t>(right)] = true;
    for (Eigen::Index s = 1; s < right; ++s) {
        m.transition(s, s - 1) += 0.5;
        m.transition(s, s + 1) += 0.5;
    }
    step_reward(1, left) = -1.0;
    step_reward(right - 1, right) = 1.0;
    for (Eigen::Index s = 1; s < right; ++s) {
        m.reward(s) = m.transition.row(s).dot(step_reward.row(s));
    }
    m.transition_reward = std::move(step_reward);
    validate_mrp(m);
    return m;
}

StateIndex random_walk_center(std::size_t n_states) { return (n_states + 1) / 2; }

Mrp make_two_state(double p, double discount) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw MrpError(MrpError::Kind::InvalidArgument, "self-transition probability must lie in [0,1]");
    }
    Mrp m;
    m.discount = discount;
    m.transition.resize(2, 2);
    m.transition << p, 1.0 - p, 1.0 - p, p;
    m.reward = Vector::Zero(2);
    m.terminal = {false, false};
    validate_mrp(m);
    return m;
}

Mrp read_mrp(std::istream& in) {
    auto fail = [](const std::string& what) { throw MrpError(MrpError::Kind::Parse, "MRP file: " + what); };
    long long n = 0;
    Mrp m;
    if (!(in >> n >> m.discount) || n <= 0) fail("expected header \"n_states gamma\"");
    const auto size = static_cast<Eigen::Index>(n);
    m.transition.resize(size, size);
    m.reward.resize(size);
    m.terminal.resize(static_cast<std::size_t>(n));
    for (Eigen::Index r = 0; r < size; ++r) {
        for (Eigen::Index c = 0; c < size; ++c) {
            if (!(in >> m.transition(r, c))) fail("transition row " + std::to_string(r) + " is short");
        }
    }
    for (Eigen::Index s = 0; s < size; ++s) {
        if (!(in >> m.reward(s))) fail("reward line is short");
    }
    for (std::size_t s = 0; s < m.terminal.size(); ++s) {
        int flag = 0;
        if (!(in >> flag) || (flag != 0 && flag != 1)) fail("terminal flags must be 0 or 1");
        m.terminal[s] = flag == 1;
    }
    std::string extra;
    if (in >> extra) fail("trailing content \"" + extra + "\"");
    validate_mrp(m);
    return m;
}

Mrp load_mrp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MrpError(MrpError::Kind::Parse, "cannot open " + path);
    return read_mrp(in);
}

}  // namespace recency
