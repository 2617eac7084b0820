// Python bindings for the recency library.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "recency/analysis.hpp"
#include "recency/mrp.hpp"
#include "recency/offpolicy.hpp"
#include "recency/operator_engine.hpp"
#include "recency/return_algebra.hpp"
#include "recency/return_spec.hpp"
#include "recency/td_sim.hpp"

namespace py = pybind11;
using namespace recency;

namespace {

std::vector<double> weights_prefix(const std::string& spec, std::size_t n) {
    return impulse_from_spec(parse_return_spec(spec)).take(n);
}

std::vector<double> nstep_weights(const std::string& spec, std::size_t n) {
    const WeightSeq c = h_to_c(impulse_from_spec(parse_return_spec(spec)));
    std::vector<double> out;
    for (std::size_t i = 1; i <= n; ++i) out.push_back(c[i]);
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
    mod.doc() = "Compound-return estimators on Markov reward processes";

    py::register_exception<MrpError>(mod, "MrpError", PyExc_ValueError);
    py::register_exception<SpecError>(mod, "SpecError", PyExc_ValueError);
    py::register_exception<NonConvexSpec>(mod, "NonConvexSpec", PyExc_ValueError);

    py::class_<Mrp>(mod, "Mrp")
        .def_readonly("transition", &Mrp::transition)
        .def_readonly("reward", &Mrp::reward)
        .def_readonly("discount", &Mrp::discount)
        .def_readonly("terminal", &Mrp::terminal)
        .def_property_readonly("n_states", &Mrp::n_states);

    mod.def("random_walk", &make_random_walk, py::arg("n_states"), py::arg("gamma"));
    mod.def("random_walk_center", &random_walk_center, py::arg("n_states"));
    mod.def("two_state", &make_two_state, py::arg("p"), py::arg("gamma"));
    mod.def("load_mrp", &load_mrp, py::arg("path"));
    mod.def("exact_values", &exact_values, py::arg("mrp"));

    mod.def("weights", &weights_prefix, py::arg("spec"), py::arg("n"),
            "First n TD-error weights of a return spec.");
    mod.def("nstep_weights", &nstep_weights, py::arg("spec"), py::arg("n"),
            "n-step weights c_1..c_n of a return spec.");
    mod.def("spec_label", [](const std::string& s) { return spec_label(parse_return_spec(s)); });

    mod.def(
        "classify",
        [](const std::string& spec, double gamma, double eps) {
            const Classification c = classify(impulse_from_spec(parse_return_spec(spec)), gamma, eps);
            py::dict d;
            d["linear"] = c.is_linear;
            d["affine"] = c.is_affine;
            d["convex"] = c.is_convex;
            d["compound"] = c.is_compound;
            d["nstep"] = c.is_nstep;
            d["weak_recency"] = c.weak_recency;
            d["strong_recency"] = c.strong_recency;
            d["weight_sum"] = c.weight_sum;
            d["modulus"] = c.modulus;
            return d;
        },
        py::arg("spec"), py::arg("gamma"), py::arg("eps") = kDefaultTolerance);
    mod.def(
        "modulus", [](const std::string& spec, double gamma) {
            return contraction_modulus(h_to_c(impulse_from_spec(parse_return_spec(spec))), gamma);
        },
        py::arg("spec"), py::arg("gamma"));
    mod.def("variance_bound", &variance_bound, py::arg("modulus"), py::arg("gamma"), py::arg("kappa"));

    mod.def(
        "apply_operator",
        [](const Mrp& m, const std::string& spec, const ValueFunction& v) {
            return apply_operator(m, impulse_from_spec(parse_return_spec(spec)), v);
        },
        py::arg("mrp"), py::arg("spec"), py::arg("v"));
    mod.def(
        "iterate",
        [](const Mrp& m, const std::string& spec, const ValueFunction& v0, double step, std::size_t max_iters) {
            IterateOptions o;
            o.step = step;
            o.max_iters = max_iters;
            const IterationTrace t = iterate(m, impulse_from_spec(parse_return_spec(spec)), v0, o);
            std::vector<double> dist;
            for (const auto& r : t.records) dist.push_back(r.distance);
            return py::make_tuple(std::string(to_string(t.verdict)), dist);
        },
        py::arg("mrp"), py::arg("spec"), py::arg("v0"), py::arg("step") = 1.0, py::arg("max_iters") = 10'000,
        "Returns (verdict, distances to the true values per iteration).");
    mod.def(
        "empirical_modulus",
        [](const Mrp& m, const std::string& spec, std::size_t pairs, std::uint64_t seed) {
            return empirical_modulus(m, impulse_from_spec(parse_return_spec(spec)), pairs, seed);
        },
        py::arg("mrp"), py::arg("spec"), py::arg("pairs") = 1000, py::arg("seed") = 0);

    mod.def(
        "sweep",
        [](const Mrp& m, const std::vector<std::string>& specs, const std::vector<double>& alphas,
           StateIndex start, std::size_t episodes, std::size_t trials, std::uint64_t seed, unsigned threads) {
            SweepConfig cfg;
            for (const auto& s : specs) cfg.specs.push_back(parse_return_spec(s));
            cfg.alphas = alphas;
            cfg.episodes = episodes;
            cfg.trials = trials;
            cfg.seed = seed;
            cfg.start = start;
            cfg.threads = threads;
            std::ostringstream out;
            {
                py::gil_scoped_release release;
                write_sweep_csv(out, run_sweep(m, cfg));
            }
            return out.str();
        },
        py::arg("mrp"), py::arg("specs"), py::arg("alphas"), py::arg("start"), py::arg("episodes") = 10,
        py::arg("trials") = 100, py::arg("seed") = 0, py::arg("threads") = 0, "Runs a step-size sweep; returns CSV text.");

    mod.def(
        "check_bound",
        [](const Mrp& m, const std::string& spec, const ValueFunction& v, StateIndex s, std::size_t samples,
           std::uint64_t seed) {
            VarianceOptions o;
            o.samples = samples;
            o.seed = seed;
            const VarianceReport r = check_bound(m, parse_return_spec(spec), v, s, o);
            py::dict d;
            d["variance"] = r.empirical_variance;
            d["bound"] = r.bound;
            d["kappa"] = r.kappa;
            d["modulus"] = r.modulus;
            d["satisfied"] = r.satisfied;
            return d;
        },
        py::arg("mrp"), py::arg("spec"), py::arg("v"), py::arg("state"), py::arg("samples") = 100'000,
        py::arg("seed") = 0);

    mod.def(
        "check_offpolicy",
        [](const std::vector<double>& h, const std::vector<double>& rho, double eps) -> py::object {
            const ConditionResult r = check_offpolicy_condition({h, rho}, eps);
            if (r.holds) return py::none();
            return py::int_(*r.first_violation);
        },
        py::arg("h"), py::arg("rho"), py::arg("eps") = kDefaultTolerance,
        "None when the condition holds, else the first violating index.");
}
