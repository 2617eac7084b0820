#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace recency {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using StateIndex = std::size_t;

/// One value per state. Entries at terminal states are zero.
using ValueFunction = Eigen::VectorXd;

class MrpError : public std::runtime_error {
public:
    enum class Kind {
        NonStochasticRow,
        NegativeProbability,
        NonAbsorbingTerminal,
        BadDiscount,
        RewardMismatch,
        SizeMismatch,
        SingularSystem,
        InvalidArgument,
        Parse,
    };

    MrpError(Kind kind, std::string message, std::optional<std::size_t> index = std::nullopt)
        : std::runtime_error(std::move(message)), kind_(kind), index_(index) {}

    Kind kind() const noexcept { return kind_; }
    /// Offending row or state, when the error concerns one.
    std::optional<std::size_t> index() const noexcept { return index_; }

private:
    Kind kind_;
    std::optional<std::size_t> index_;
};

/// Finite Markov reward process with the policy already folded in.
///
/// Operators consume the expected per-state reward vector `reward`. Sampled
/// trajectories emit transition-level rewards from `transition_reward` when it
/// is present (e.g. the random walk's +-1 exits), falling back to the state
/// reward otherwise. When both are given they must agree in expectation.
struct Mrp {
    Matrix transition;
    Vector reward;
    double discount = 0.0;
    std::vector<bool> terminal;
    std::optional<Matrix> transition_reward;

    std::size_t n_states() const noexcept { return static_cast<std::size_t>(reward.size()); }
    bool is_terminal(StateIndex s) const { return terminal[s]; }
    std::size_t n_nonterminal() const noexcept;
    /// Reward emitted on the transition s -> next.
    double step_reward(StateIndex s, StateIndex next) const;
};

/// One sampled episode. `states` always has `length() + 1` entries: the final
/// entry is the terminal state reached, or the state where the horizon cut in.
struct Trajectory {
    std::vector<StateIndex> states;
    std::vector<double> rewards;
    bool terminated = false;

    std::size_t length() const noexcept { return rewards.size(); }
};

/// Throws MrpError describing the first violated invariant.
void validate_mrp(const Mrp& m);

/// Solves (I - gamma P) v = r by dense LU.
ValueFunction exact_values(const Mrp& m);

/// r + gamma P v, with zeros at terminal states. Terminal entries of `v` are
/// treated as zero.
ValueFunction bellman_apply(const Mrp& m, const ValueFunction& v);

/// n-fold composition of bellman_apply; n >= 1.
ValueFunction n_step_apply(const Mrp& m, const ValueFunction& v, int n);

/// Deterministic in `seed`. Stops on entering a terminal state or after
/// `max_horizon` steps.
Trajectory sample_trajectory(const Mrp& m, StateIndex start, std::uint64_t seed,
                             std::size_t max_horizon);

/// Realized discounted sum of rewards.
double discounted_return(const Trajectory& traj, double discount);

/// Linear chain of `n_states` non-terminal states (indices 1..n) between two
/// absorbing terminals (0 on the left, n+1 on the right). Moves are 50/50;
/// the left exit pays -1 and the right exit +1.
Mrp make_random_walk(std::size_t n_states, double discount);

/// Start state of the random walk: the middle of the chain.
StateIndex random_walk_center(std::size_t n_states);

/// Two non-terminal states with self-transition probability p and zero reward.
Mrp make_two_state(double p, double discount);

/// Plain-text format: "n gamma", n rows of transition probabilities, one row
/// of rewards, one row of 0/1 terminal flags. The result is validated.
Mrp read_mrp(std::istream& in);
Mrp load_mrp(const std::string& path);

/// Sets terminal entries to zero.
ValueFunction mask_terminal(const Mrp& m, ValueFunction v);

}  // namespace recency
