#include "recency/td_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "recency/format.hpp"
#include "recency/rng.hpp"

namespace recency {

namespace {

void check_alpha(double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("step size must lie in [0, 1]");
}

}  // namespace

std::vector<double> td_errors(const Trajectory& traj, const ValueFunction& v, double gamma) {
    const std::size_t T = traj.length();
    std::vector<double> delta(T);
    for (std::size_t t = 0; t < T; ++t) {
        const bool last_terminal = traj.terminated && t + 1 == T;
        const double next = last_terminal ? 0.0 : v(static_cast<Eigen::Index>(traj.states[t + 1]));
        delta[t] = traj.rewards[t] + gamma * next - v(static_cast<Eigen::Index>(traj.states[t]));
    }
    return delta;
}

double nstep_target(const Trajectory& traj, std::size_t t, std::size_t n, const ValueFunction& v,
                    double gamma) {
    const std::size_t T = traj.length();
    if (t >= T) throw std::out_of_range("time index past the end of the trajectory");
    const std::size_t k = std::min(n, T - t);
    double g = 0.0;
    double discount = 1.0;
    for (std::size_t i = 0; i < k; ++i) {
        g += discount * traj.rewards[t + i];
        discount *= gamma;
    }
    const bool at_terminal = traj.terminated && t + k == T;
    if (!at_terminal) g += discount * v(static_cast<Eigen::Index>(traj.states[t + k]));
    return g;
}

double forward_target(const Trajectory& traj, std::size_t t, const WeightSeq& h, const ValueFunction& v,
                      double gamma) {
    const std::size_t T = traj.length();
    if (t >= T) throw std::out_of_range("time index past the end of the trajectory");
    const auto delta = td_errors(traj, v, gamma);
    double g = v(static_cast<Eigen::Index>(traj.states[t]));
    double discount = 1.0;
    for (std::size_t i = 0; t + i < T; ++i) {
        g += h[i] * discount * delta[t + i];
        discount *= gamma;
    }
    return g;
}

std::vector<double> episode_targets(const Trajectory& traj, const WeightSeq& h, const ValueFunction& v,
                                    double gamma) {
    if (h.first_index() != 0) throw std::invalid_argument("TD-error weights must be indexed from 0");
    const std::size_t T = traj.length();
    const auto delta = td_errors(traj, v, gamma);
    std::vector<double> targets(T);
    for (std::size_t t = 0; t < T; ++t) targets[t] = v(static_cast<Eigen::Index>(traj.states[t]));

    const auto prefix = h.prefix();
    for (std::size_t t = 0; t < T; ++t) {
        double discount = 1.0;
        const std::size_t stop = std::min(prefix.size(), T - t);
        for (std::size_t i = 0; i < stop; ++i) {
            targets[t] += prefix[i] * discount * delta[t + i];
            discount *= gamma;
        }
    }

    const std::size_t P = h.period();
    if (P > 0) {
        const std::size_t L = prefix.size();
        const double decay = h.ratio() * std::pow(gamma, static_cast<double>(P));
        std::vector<double> carry(T + P, 0.0);  // E(w), zero for w >= T
        for (std::size_t w = T; w-- > 0;) carry[w] = delta[w] + decay * carry[w + P];
        const auto pattern = h.pattern();
        const double lead = std::pow(gamma, static_cast<double>(L));
        for (std::size_t t = 0; t + L < T; ++t) {
            double tail = 0.0;
            double discount = lead;
            for (std::size_t k = 0; k < P && t + L + k < T; ++k) {
                tail += pattern[k] * discount * carry[t + L + k];
                discount *= gamma;
            }
            targets[t] += tail;
        }
    }
    return targets;
}

ValueFunction offline_episode_backup(const Trajectory& traj, const ValueFunction& v, const WeightSeq& h,
                                     double gamma, double alpha) {
    check_alpha(alpha);
    const auto targets = episode_targets(traj, h, v, gamma);
    ValueFunction out = v;
    for (std::size_t t = 0; t < targets.size(); ++t) {
        const auto s = static_cast<Eigen::Index>(traj.states[t]);
        out(s) += alpha * (targets[t] - v(s));
    }
    return out;
}

ValueFunction sequential_episode_backup(const Trajectory& traj, const ValueFunction& v, const WeightSeq& h,
                                        double gamma, double alpha) {
    check_alpha(alpha);
    const auto targets = episode_targets(traj, h, v, gamma);
    ValueFunction out = v;
    for (std::size_t t = 0; t < targets.size(); ++t) {
        const auto s = static_cast<Eigen::Index>(traj.states[t]);
        out(s) += alpha * (targets[t] - out(s));
    }
    return out;
}

const char* to_string(BackupMode mode) noexcept {
    return mode == BackupMode::Sequential ? "sequential" : "accumulate";
}

BackupMode parse_backup_mode(std::string_view text) {
    if (text == "sequential") return BackupMode::Sequential;
    if (text == "accumulate") return BackupMode::Accumulate;
    throw std::invalid_argument("unknown backup mode: " + std::string(text));
}

ValueFunction backward_tdlambda_offline(const Trajectory& traj, const ValueFunction& v, double lambda,
                                        double gamma, double alpha) {
    check_alpha(alpha);
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must lie in [0, 1]");
    const auto delta = td_errors(traj, v, gamma);
    Vector trace = Vector::Zero(v.size());
    Vector increment = Vector::Zero(v.size());
    for (std::size_t t = 0; t < delta.size(); ++t) {
        trace *= gamma * lambda;
        trace(static_cast<Eigen::Index>(traj.states[t])) += 1.0;
        increment += alpha * delta[t] * trace;
    }
    return v + increment;
}

const SweepRow& SweepResult::at(const std::string& spec, double alpha) const {
    for (const auto& row : rows) {
        if (row.spec == spec && std::abs(row.alpha - alpha) < 1e-12) return row;
    }
    throw std::out_of_range("no sweep row for " + spec + " at alpha " + format_double(alpha));
}

std::vector<double> default_alpha_grid() {
    std::vector<double> grid;
    for (int k = 1; k <= 20; ++k) grid.push_back(k / 20.0);
    return grid;
}

SweepResult run_sweep(const Mrp& m, const SweepConfig& config) {
    if (config.specs.empty() || config.alphas.empty()) throw std::invalid_argument("sweep needs specs and step sizes");
    if (config.episodes == 0 || config.trials == 0) throw std::invalid_argument("episodes and trials must be >= 1");
    for (double a : config.alphas) {
        if (!(a > 0.0 && a <= 1.0)) throw std::invalid_argument("step sizes must lie in (0, 1]");
    }
    validate_mrp(m);
    if (config.start >= m.n_states() || m.is_terminal(config.start)) {
        throw std::invalid_argument("sweep start state must be non-terminal");
    }

    std::vector<double> alphas = config.alphas;
    std::sort(alphas.begin(), alphas.end());
    alphas.erase(std::unique(alphas.begin(), alphas.end()), alphas.end());

    std::vector<WeightSeq> weights;
    std::vector<std::string> labels;
    for (const auto& spec : config.specs) {
        weights.push_back(impulse_from_spec(spec));
        labels.push_back(spec_label(spec));
    }

    const ValueFunction v_pi = exact_values(m);
    std::vector<Eigen::Index> live;
    for (std::size_t s = 0; s < m.n_states(); ++s) {
        if (!m.is_terminal(s)) live.push_back(static_cast<Eigen::Index>(s));
    }
    auto error_of = [&](const ValueFunction& v) {
        double sq = 0.0;
        for (auto s : live) sq += (v(s) - v_pi(s)) * (v(s) - v_pi(s));
        return std::sqrt(sq);
    };

    const std::size_t cells = weights.size() * alphas.size();
    // scores[trial][cell] and, optionally, per-episode errors[trial][cell][episode]
    std::vector<std::vector<double>> scores(config.trials, std::vector<double>(cells));
    std::vector<std::vector<double>> episode_errors;
    if (config.keep_episodes) episode_errors.assign(config.trials, std::vector<double>(cells * config.episodes));

    auto run_trial = [&](std::size_t trial) {
        const std::uint64_t trial_seed = derive_seed(config.seed, trial);
        std::vector<Trajectory> episodes;
        episodes.reserve(config.episodes);
        for (std::size_t e = 0; e < config.episodes; ++e) {
            episodes.push_back(sample_trajectory(m, config.start, derive_seed(trial_seed, e), config.max_horizon));
        }
        for (std::size_t w = 0; w < weights.size(); ++w) {
            for (std::size_t a = 0; a < alphas.size(); ++a) {
                const std::size_t cell = w * alphas.size() + a;
                ValueFunction v = ValueFunction::Zero(static_cast<Eigen::Index>(m.n_states()));
                double total = 0.0;
                for (std::size_t e = 0; e < episodes.size(); ++e) {
                    v = config.backup == BackupMode::Sequential
                            ? sequential_episode_backup(episodes[e], v, weights[w], m.discount, alphas[a])
                            : offline_episode_backup(episodes[e], v, weights[w], m.discount, alphas[a]);
                    const double err = error_of(v);
                    total += err;
                    if (config.keep_episodes) episode_errors[trial][cell * config.episodes + e] = err;
                }
                scores[trial][cell] = total / static_cast<double>(episodes.size());
            }
        }
    };

    unsigned threads = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, config.trials));
    if (threads <= 1) {
        for (std::size_t k = 0; k < config.trials; ++k) run_trial(k);
    } else {
        std::vector<std::thread> pool;
        for (unsigned id = 0; id < threads; ++id) {
            pool.emplace_back([&, id] {
                for (std::size_t k = id; k < config.trials; k += threads) run_trial(k);
            });
        }
        for (auto& th : pool) th.join();
    }

    SweepResult result;
    const double n = static_cast<double>(config.trials);
    for (std::size_t w = 0; w < weights.size(); ++w) {
        SpecMinimum best{labels[w], 0.0, std::numeric_limits<double>::infinity()};
        for (std::size_t a = 0; a < alphas.size(); ++a) {
            const std::size_t cell = w * alphas.size() + a;
            double sum = 0.0;
            for (std::size_t k = 0; k < config.trials; ++k) sum += scores[k][cell];
            const double mean = sum / n;
            double sq = 0.0;
            for (std::size_t k = 0; k < config.trials; ++k) sq += (scores[k][cell] - mean) * (scores[k][cell] - mean);
            const double half = config.trials > 1 ? 1.96 * std::sqrt(sq / (n - 1.0)) / std::sqrt(n) : 0.0;
            result.rows.push_back({labels[w], alphas[a], mean, half, config.trials, config.seed});
            if (mean < best.mean_error) best = {labels[w], alphas[a], mean};
            if (config.keep_episodes) {
                for (std::size_t k = 0; k < config.trials; ++k) {
                    for (std::size_t e = 0; e < config.episodes; ++e) {
                        result.episodes.push_back(
                            {labels[w], alphas[a], k, e, episode_errors[k][cell * config.episodes + e]});
                    }
                }
            }
        }
        result.minima.push_back(best);
    }
    return result;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
    out << "spec,alpha,mean_error,ci95_half,n_trials,seed\n";
    for (const auto& r : result.rows) {
        out << r.spec << ',' << format_double(r.alpha) << ',' << format_double(r.mean_error) << ','
            << format_double(r.ci95_half) << ',' << r.n_trials << ',' << r.seed << '\n';
    }
}

void write_episode_csv(std::ostream& out, const SweepResult& result) {
    out << "spec,alpha,trial,episode,error\n";
    for (const auto& r : result.episodes) {
        out << r.spec << ',' << format_double(r.alpha) << ',' << r.trial << ',' << r.episode << ','
            << format_double(r.error) << '\n';
    }
}

}  // namespace recency
