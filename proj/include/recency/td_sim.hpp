#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "recency/mrp.hpp"
#include "recency/return_spec.hpp"
#include "recency/weights.hpp"

namespace recency {

/// delta_t = R_t + gamma V(S_{t+1}) - V(S_t) for t < T, with V = 0 at
/// terminal states.
std::vector<double> td_errors(const Trajectory& traj, const ValueFunction& v, double gamma);

/// n-step return from time t, cut at the end of the trajectory:
/// sum_{i<k} gamma^i R_{t+i} + gamma^k V(S_{t+k}) with k = min(n, T - t).
double nstep_target(const Trajectory& traj, std::size_t t, std::size_t n, const ValueFunction& v,
                    double gamma);

/// V_t + sum_i h_i gamma^i delta_{t+i}, summed term by term up to the end of
/// the trajectory (TD errors past the end are zero). Throws std::out_of_range
/// unless t < T.
double forward_target(const Trajectory& traj, std::size_t t, const WeightSeq& h, const ValueFunction& v,
                      double gamma);

/// forward_target for every t < T in O(T (L + P)), where L is the prefix
/// length of h and P its tail period. Tail terms are accumulated backwards
/// through E(w) = delta_w + ratio gamma^P E(w + P).
std::vector<double> episode_targets(const Trajectory& traj, const WeightSeq& h, const ValueFunction& v,
                                    double gamma);

/// Offline forward-view backup: every target is computed from the value
/// function at the start of the episode, increments of repeated visits add up,
/// and the sum is applied once at the end.
ValueFunction offline_episode_backup(const Trajectory& traj, const ValueFunction& v, const WeightSeq& h,
                                     double gamma, double alpha);

/// Offline forward-view backup applied experience by experience at episode
/// end: targets still come from the value function at the start of the
/// episode, but each v(S_t) <- v(S_t) + alpha (G_t - v(S_t)) sees the
/// result of earlier backups to the same state.
ValueFunction sequential_episode_backup(const Trajectory& traj, const ValueFunction& v, const WeightSeq& h,
                                        double gamma, double alpha);

enum class BackupMode { Sequential, Accumulate };

const char* to_string(BackupMode mode) noexcept;
BackupMode parse_backup_mode(std::string_view text);

/// Offline backward-view TD(lambda) with accumulating traces: traces decay by
/// gamma lambda every step and the visited state's trace gains 1; increments
/// alpha delta_t z are summed over the episode and applied at the end.
ValueFunction backward_tdlambda_offline(const Trajectory& traj, const ValueFunction& v, double lambda,
                                        double gamma, double alpha);

struct SweepConfig {
    std::vector<ReturnSpec> specs;
    std::vector<double> alphas;
    std::size_t episodes = 10;
    std::size_t trials = 400;
    std::uint64_t seed = 0;
    StateIndex start = 0;
    std::size_t max_horizon = 100'000;
    /// Worker threads; 0 picks the hardware concurrency. Output does not
    /// depend on this.
    unsigned threads = 0;
    bool keep_episodes = false;
    BackupMode backup = BackupMode::Sequential;
};

struct SweepRow {
    std::string spec;
    double alpha = 0.0;
    double mean_error = 0.0;
    double ci95_half = 0.0;
    std::size_t n_trials = 0;
    std::uint64_t seed = 0;
};

struct EpisodeRow {
    std::string spec;
    double alpha = 0.0;
    std::size_t trial = 0;
    std::size_t episode = 0;
    double error = 0.0;
};

struct SpecMinimum {
    std::string spec;
    double alpha = 0.0;
    double mean_error = 0.0;
};

struct SweepResult {
    /// Ordered by spec (input order), then alpha ascending.
    std::vector<SweepRow> rows;
    std::vector<SpecMinimum> minima;
    std::vector<EpisodeRow> episodes;  ///< filled when keep_episodes is set

    const SweepRow& at(const std::string& spec, double alpha) const;
};

/// Step-size sweep. Each trial starts from v = 0 at `start` and runs
/// `episodes` episodes with offline backups; its score is the mean over
/// episodes of |v - v_pi|_2 across non-terminal states. Episode e of trial k
/// is sampled from stream derive_seed(derive_seed(seed, k), e), so every
/// (spec, alpha) pair sees the same episodes and the result is independent
/// of scheduling.
SweepResult run_sweep(const Mrp& m, const SweepConfig& config);

/// "spec,alpha,mean_error,ci95_half,n_trials,seed"
void write_sweep_csv(std::ostream& out, const SweepResult& result);
/// "spec,alpha,trial,episode,error"
void write_episode_csv(std::ostream& out, const SweepResult& result);

/// Default step-size grid 0.05, 0.10, ..., 1.00.
std::vector<double> default_alpha_grid();

}  // namespace recency
