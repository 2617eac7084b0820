#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "recency/analysis.hpp"
#include "recency/format.hpp"
#include "recency/mrp.hpp"
#include "recency/offpolicy.hpp"
#include "recency/operator_engine.hpp"
#include "recency/return_algebra.hpp"
#include "recency/return_spec.hpp"
#include "recency/rng.hpp"
#include "recency/td_sim.hpp"

namespace recency::cli {

namespace {

/// Raised for bad input discovered after flag parsing (exit code 2).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string out_path;
};

struct CounterexampleArgs {
    int tau = 1;
    double gamma = 0.9;
    double p = 0.4;
    std::vector<double> v0{1.0, -1.0};
    double step = 1.0;
    std::size_t max_iters = 10'000;
    double conv_tol = 1e-10;
    double div_threshold = 1e6;
};

struct FieldArgs {
    int tau = 1;
    double gamma = 0.9;
    double p = 0.4;
    double grid_min = -2.0;
    double grid_max = 2.0;
    std::size_t grid_points = 21;
};

struct SweepArgs {
    std::string preset = "fig4-sparse";
    std::vector<std::string> specs;
    std::vector<double> alphas;
    std::size_t episodes = 10;
    std::size_t trials = 400;
    std::uint64_t seed = 0;
    std::size_t n_states = 19;
    double gamma = 0.99;
    std::string mrp_path;
    long long start = -1;
    unsigned threads = 0;
    std::string episodes_out;
    std::string backup = "sequential";
};

struct ClassifyArgs {
    std::string spec;
    double gamma = 0.9;
    double eps = kDefaultTolerance;
};

struct VarianceArgs {
    std::vector<std::string> specs{"lambda:0.9"};
    double gamma = 0.99;
    std::size_t n_states = 19;
    std::string mrp_path;
    long long state = -1;
    std::size_t samples = 100'000;
    std::size_t horizon = 200;
    std::uint64_t seed = 0;
    double slack = 0.05;
};

struct OffPolicyArgs {
    std::string trace_path;
    double eps = kDefaultTolerance;
};

struct ScanArgs {
    std::vector<int> taus{1, 2, 3};
    std::vector<double> gammas{0.5, 0.9, 0.99};
    std::vector<double> ps{0.0, 0.2, 0.4, 0.6};
    std::size_t pairs = 1000;
    std::uint64_t seed = 0;
};

std::vector<ReturnSpec> parse_specs(const std::vector<std::string>& texts) {
    std::vector<ReturnSpec> specs;
    for (const auto& text : texts) {
        // "lambda:0.9 nstep:5" may arrive as one argument
        std::istringstream words(text);
        for (std::string word; words >> word;) specs.push_back(parse_return_spec(word));
    }
    return specs;
}

void emit(const Common& common, std::ostream& out, const std::string& text) {
    if (common.out_path.empty()) {
        out << text;
        return;
    }
    std::ofstream file(common.out_path, std::ios::binary | std::ios::trunc);
    if (!file) throw UsageError("cannot write " + common.out_path);
    file << text;
}

Mrp walk_or_file(const std::string& path, std::size_t n_states, double gamma) {
    if (!path.empty()) return load_mrp(path);
    return make_random_walk(n_states, gamma);
}

StateIndex pick_state(const Mrp& m, long long requested, bool is_walk, std::size_t n_states) {
    if (requested >= 0) {
        const auto s = static_cast<StateIndex>(requested);
        if (s >= m.n_states() || m.is_terminal(s)) throw UsageError("state must be a non-terminal state index");
        return s;
    }
    if (is_walk) return random_walk_center(n_states);
    for (StateIndex s = 0; s < m.n_states(); ++s) {
        if (!m.is_terminal(s)) return s;
    }
    throw UsageError("MRP has no non-terminal state");
}

int cmd_counterexample(const CounterexampleArgs& a, const Common& common, std::ostream& out, std::ostream& err) {
    if (a.v0.size() != 2) throw UsageError("--v0 takes two values");
    const Mrp m = make_two_state(a.p, a.gamma);
    ValueFunction v0(2);
    v0 << a.v0[0], a.v0[1];
    const auto h = impulse_from_spec(DelayedPulse{a.tau});
    const IterationTrace trace = iterate(m, h, v0, {a.step, a.max_iters, a.conv_tol, a.div_threshold});

    std::ostringstream csv;
    csv << "iter,linf_dist";
    for (Eigen::Index s = 0; s < v0.size(); ++s) csv << ",v" << (s + 1);
    csv << '\n';
    for (const auto& r : trace.records) {
        csv << r.iteration << ',' << format_double(r.distance);
        for (Eigen::Index s = 0; s < r.values.size(); ++s) csv << ',' << format_double(r.values(s));
        csv << '\n';
    }
    emit(common, out, csv.str());

    err << "verdict: " << to_string(trace.verdict) << " after " << trace.last().iteration << " iterations";
    if (trace.records.size() >= 2) {
        const auto& prev = trace.records[trace.records.size() - 2];
        if (prev.distance > 0.0) err << ", distance ratio " << format_double(trace.last().distance / prev.distance);
    }
    err << '\n';
    switch (trace.verdict) {
        case Verdict::Converged: return kOk;
        case Verdict::Diverged: return kFail;
        case Verdict::Exhausted: return kExhausted;
    }
    return kExhausted;
}

int cmd_field(const FieldArgs& a, const Common& common, std::ostream& out) {
    const Mrp m = make_two_state(a.p, a.gamma);
    const auto rows = update_field(m, impulse_from_spec(DelayedPulse{a.tau}), {a.grid_min, a.grid_max, a.grid_points});
    std::ostringstream csv;
    csv << "v1,v2,d1,d2\n";
    for (const auto& r : rows) {
        csv << format_double(r.v1) << ',' << format_double(r.v2) << ',' << format_double(r.d1) << ','
            << format_double(r.d2) << '\n';
    }
    emit(common, out, csv.str());
    return kOk;
}

int cmd_sweep(const SweepArgs& a, const Common& common, std::ostream& out) {
    SweepConfig config;
    if (a.preset == "fig4-sparse") {
        if (!a.specs.empty()) throw UsageError("--specs requires --preset custom");
        config.specs = {SparseLambdaReturn{0.9, 1}, SparseLambdaReturn{0.75, 3}, SparseLambdaReturn{0.65, 5}};
    } else if (a.preset == "fig6-trunc") {
        if (!a.specs.empty()) throw UsageError("--specs requires --preset custom");
        config.specs = {TruncatedLambdaReturn{0.99, 10}, TruncatedLambdaReturn{0.93, 20},
                        TruncatedLambdaReturn{0.9, std::nullopt}};
    } else {
        config.specs = parse_specs(a.specs);
        if (config.specs.empty()) throw UsageError("--preset custom needs --specs");
    }
    config.alphas = a.alphas.empty() ? default_alpha_grid() : a.alphas;
    for (double alpha : config.alphas) {
        if (!(alpha > 0.0 && alpha <= 1.0)) throw UsageError("step sizes must lie in (0, 1]");
    }
    config.episodes = a.episodes;
    config.trials = a.trials;
    config.seed = a.seed;
    config.threads = a.threads;
    config.backup = parse_backup_mode(a.backup);
    config.keep_episodes = !a.episodes_out.empty();
    const Mrp m = walk_or_file(a.mrp_path, a.n_states, a.gamma);
    config.start = pick_state(m, a.start, a.mrp_path.empty(), a.n_states);

    const SweepResult result = run_sweep(m, config);
    std::ostringstream csv;
    write_sweep_csv(csv, result);
    if (!a.episodes_out.empty()) {
        std::ostringstream long_csv;
        write_episode_csv(long_csv, result);
        emit(Common{a.episodes_out}, out, long_csv.str());
    }
    emit(common, out, csv.str());
    return kOk;
}

int cmd_classify(const ClassifyArgs& a, std::ostream& out) {
    const ReturnSpec spec = parse_return_spec(a.spec);
    const Classification c = classify(impulse_from_spec(spec), a.gamma, a.eps);
    auto yes = [](bool b) { return b ? "true" : "false"; };
    const char* tier = c.is_nstep      ? "n-step"
                       : c.is_compound ? "compound"
                       : c.is_convex   ? "convex"
                       : c.is_affine   ? "affine"
                                       : "linear";
    out << "spec: " << spec_label(spec) << '\n'
        << "gamma: " << format_double(a.gamma) << '\n'
        << "class: " << tier << '\n'
        << "linear: " << yes(c.is_linear) << '\n'
        << "affine: " << yes(c.is_affine) << '\n'
        << "convex: " << yes(c.is_convex) << '\n'
        << "compound: " << yes(c.is_compound) << '\n'
        << "nstep: " << yes(c.is_nstep) << '\n'
        << "weak_recency: " << yes(c.weak_recency) << '\n'
        << "strong_recency: " << yes(c.strong_recency) << '\n'
        << "weight_sum: " << format_double(c.weight_sum) << '\n'
        << "modulus: " << format_double(c.modulus) << '\n';
    return kOk;
}

int cmd_variance(const VarianceArgs& a, const Common& common, std::ostream& out, std::ostream& err) {
    const auto specs = parse_specs(a.specs);
    if (specs.empty()) throw UsageError("--spec is required");
    const Mrp m = walk_or_file(a.mrp_path, a.n_states, a.gamma);
    const StateIndex s = pick_state(m, a.state, a.mrp_path.empty(), a.n_states);
    const ValueFunction v = ValueFunction::Zero(static_cast<Eigen::Index>(m.n_states()));
    VarianceOptions options;
    options.samples = a.samples;
    options.horizon = a.horizon;
    options.seed = a.seed;
    options.slack = a.slack;
    // Gate every spec before any sampling.
    for (const auto& spec : specs) {
        if (!classify(impulse_from_spec(spec), m.discount).is_convex) {
            err << "error: " << spec_label(spec) << " is not a convex return; the variance bound does not apply\n";
            return kFail;
        }
    }
    const double kappa = estimate_kappa(m, v, s, options.horizon, options.samples, derive_seed(options.seed, 0));
    std::vector<VarianceReport> reports;
    bool all = true;
    for (const auto& spec : specs) {
        reports.push_back(check_bound_with_kappa(m, spec, v, s, kappa, options));
        all = all && reports.back().satisfied;
    }
    std::ostringstream csv;
    write_variance_csv(csv, reports);
    emit(common, out, csv.str());
    return all ? kOk : kFail;
}

int cmd_check_offpolicy(const OffPolicyArgs& a, std::ostream& out) {
    std::ifstream in(a.trace_path);
    if (!in) throw UsageError("cannot open " + a.trace_path);
    OffPolicyTrace trace;
    try {
        trace = read_offpolicy_trace(in);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const ConditionResult r = check_offpolicy_condition(trace, a.eps);
    if (r.holds) {
        out << "PASS\n";
        return kOk;
    }
    out << "FAIL " << *r.first_violation << '\n';
    return kFail;
}

int cmd_scan_pulse(const ScanArgs& a, const Common& common, std::ostream& out) {
    for (int tau : a.taus) {
        if (tau < 0) throw UsageError("--taus must be >= 0");
    }
    std::ostringstream csv;
    csv << "tau,gamma,p,empirical_modulus,worst_case_modulus\n";
    for (int tau : a.taus) {
        const auto h = impulse_from_spec(DelayedPulse{tau});
        for (double gamma : a.gammas) {
            for (double p : a.ps) {
                const Mrp m = make_two_state(p, gamma);
                const double empirical = empirical_modulus(m, h, a.pairs, a.seed);
                const double worst = contraction_modulus(h_to_c(h), gamma);
                csv << tau << ',' << format_double(gamma) << ',' << format_double(p) << ','
                    << format_double(empirical) << ',' << format_double(worst) << '\n';
            }
        }
    }
    emit(common, out, csv.str());
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Tabular TD learning lab: return-estimator algebra, expected operators and random-walk sweeps",
                 "recency_lab"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Optional key = value file mirroring the flags; flags take precedence");

    Common common;
    auto add_out = [&](CLI::App* sub) { sub->add_option("--out,-o", common.out_path, "Output path (default stdout)"); };
    auto unit = CLI::Range(0.0, 1.0);
    auto discount = CLI::Range(0.0, 0.999999999999);

    CounterexampleArgs ce;
    auto* c_ce = app.add_subcommand("counterexample", "Iterate the delayed-pulse expected update on the two-state MRP");
    c_ce->add_option("--tau", ce.tau, "Pulse delay")->check(CLI::NonNegativeNumber);
    c_ce->add_option("--gamma", ce.gamma, "Discount")->check(discount);
    c_ce->add_option("--p", ce.p, "Self-transition probability")->check(unit);
    c_ce->add_option("--v0", ce.v0, "Initial values (two numbers)")->expected(2);
    c_ce->add_option("--step", ce.step, "Step size in (0, 1]")->check(CLI::Range(1e-300, 1.0));
    c_ce->add_option("--max-iters", ce.max_iters)->check(CLI::PositiveNumber);
    c_ce->add_option("--conv-tol", ce.conv_tol)->check(CLI::NonNegativeNumber);
    c_ce->add_option("--div-threshold", ce.div_threshold)->check(CLI::PositiveNumber);
    add_out(c_ce);

    FieldArgs fa;
    auto* c_field = app.add_subcommand("field", "Unit expected-update directions over a grid");
    c_field->add_option("--tau", fa.tau)->check(CLI::NonNegativeNumber);
    c_field->add_option("--gamma", fa.gamma)->check(discount);
    c_field->add_option("--p", fa.p)->check(unit);
    c_field->add_option("--grid-min", fa.grid_min);
    c_field->add_option("--grid-max", fa.grid_max);
    c_field->add_option("--grid-points", fa.grid_points)->check(CLI::PositiveNumber);
    add_out(c_field);

    SweepArgs sw;
    auto* c_sweep = app.add_subcommand("sweep", "Step-size sweep of offline forward-view TD on the random walk");
    c_sweep->add_option("--preset", sw.preset)->check(CLI::IsMember({"fig4-sparse", "fig6-trunc", "custom"}));
    c_sweep->add_option("--specs", sw.specs, "Estimator specs for --preset custom");
    c_sweep->add_option("--alphas", sw.alphas, "Step sizes (default 0.05..1.0 by 0.05)");
    c_sweep->add_option("--episodes", sw.episodes)->check(CLI::PositiveNumber);
    c_sweep->add_option("--trials", sw.trials)->check(CLI::PositiveNumber);
    c_sweep->add_option("--seed", sw.seed);
    c_sweep->add_option("--n-states", sw.n_states, "Random-walk length")->check(CLI::PositiveNumber);
    c_sweep->add_option("--gamma", sw.gamma)->check(discount);
    c_sweep->add_option("--mrp", sw.mrp_path, "MRP file instead of the random walk")->check(CLI::ExistingFile);
    c_sweep->add_option("--start", sw.start, "Start state (default: walk center)");
    c_sweep->add_option("--threads", sw.threads, "Worker threads (0 = all cores)");
    c_sweep->add_option("--backup", sw.backup, "Episode-end backup: sequential or accumulate")
        ->check(CLI::IsMember({"sequential", "accumulate"}));
    c_sweep->add_option("--episodes-out", sw.episodes_out, "Also write per-episode errors (long format)");
    add_out(c_sweep);

    ClassifyArgs cl;
    auto* c_cls = app.add_subcommand("classify", "Place an estimator in the return hierarchy");
    c_cls->add_option("spec", cl.spec, "Estimator, e.g. lambda:0.9")->required();
    c_cls->add_option("--gamma", cl.gamma)->check(discount);
    c_cls->add_option("--eps", cl.eps)->check(CLI::PositiveNumber);

    VarianceArgs va;
    auto* c_var = app.add_subcommand("variance", "Check the worst-case variance bound of convex returns");
    c_var->add_option("--spec", va.specs, "Estimator(s)");
    c_var->add_option("--gamma", va.gamma)->check(discount);
    c_var->add_option("--n-states", va.n_states)->check(CLI::PositiveNumber);
    c_var->add_option("--mrp", va.mrp_path)->check(CLI::ExistingFile);
    c_var->add_option("--state", va.state, "State (default: walk center)");
    c_var->add_option("--samples", va.samples)->check(CLI::Range(std::size_t{2}, std::size_t{1} << 40));
    c_var->add_option("--horizon", va.horizon)->check(CLI::PositiveNumber);
    c_var->add_option("--seed", va.seed);
    c_var->add_option("--slack", va.slack)->check(CLI::NonNegativeNumber);
    add_out(c_var);

    OffPolicyArgs op;
    auto* c_off = app.add_subcommand("check-offpolicy", "Check h_i rho_{i+1} >= h_{i+1} >= 0 on a trace file");
    c_off->add_option("trace", op.trace_path, "File of \"h rho\" lines")->required();
    c_off->add_option("--eps", op.eps)->check(CLI::PositiveNumber);

    ScanArgs sc;
    auto* c_scan = app.add_subcommand("scan-pulse", "Empirical moduli of the delayed pulse over (tau, gamma, p)");
    c_scan->add_option("--taus", sc.taus);
    c_scan->add_option("--gammas", sc.gammas)->check(discount);
    c_scan->add_option("--ps", sc.ps)->check(unit);
    c_scan->add_option("--pairs", sc.pairs)->check(CLI::PositiveNumber);
    c_scan->add_option("--seed", sc.seed);
    add_out(c_scan);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();  // program name
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }

    try {
        if (c_ce->parsed()) return cmd_counterexample(ce, common, out, err);
        if (c_field->parsed()) return cmd_field(fa, common, out);
        if (c_sweep->parsed()) return cmd_sweep(sw, common, out);
        if (c_cls->parsed()) return cmd_classify(cl, out);
        if (c_var->parsed()) return cmd_variance(va, common, out, err);
        if (c_off->parsed()) return cmd_check_offpolicy(op, out);
        if (c_scan->parsed()) return cmd_scan_pulse(sc, common, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}

}  // namespace recency::cli
