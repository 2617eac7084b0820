#include "recency/analysis.hpp"

#include <algorithm>
#include <limits>
#include <ostream>

#include "recency/format.hpp"
#include "recency/return_algebra.hpp"
#include "recency/rng.hpp"
#include "recency/td_sim.hpp"

namespace recency {

namespace {

void check_samples(std::size_t samples) {
    if (samples < 2) throw std::invalid_argument("need at least two samples");
}

// Independent streams for the kappa and variance estimates inside one check.
constexpr std::uint64_t kKappaStream = 0;
constexpr std::uint64_t kVarianceStream = 1;

}  // namespace

double estimate_kappa(const Mrp& m, const ValueFunction& v, StateIndex s, std::size_t horizon,
                      std::size_t samples, std::uint64_t seed) {
    if (horizon == 0) throw std::invalid_argument("horizon must be >= 1");
    check_samples(samples);
    const auto H = static_cast<Eigen::Index>(horizon);
    Vector sum = Vector::Zero(H);
    Matrix cross = Matrix::Zero(H, H);  // upper triangle of sum delta_i delta_j

    std::vector<std::pair<Eigen::Index, double>> nonzero;
    for (std::size_t j = 0; j < samples; ++j) {
        const Trajectory traj = sample_trajectory(m, s, derive_seed(seed, j), horizon);
        const auto delta = td_errors(traj, v, m.discount);
        nonzero.clear();
        for (std::size_t i = 0; i < delta.size(); ++i) {
            if (delta[i] != 0.0) nonzero.emplace_back(static_cast<Eigen::Index>(i), delta[i]);
        }
        // TD errors are often sparse (zero rewards, v = 0), so only nonzero
        // pairs are accumulated.
        for (std::size_t a = 0; a < nonzero.size(); ++a) {
            const auto [ia, va] = nonzero[a];
            sum(ia) += va;
            for (std::size_t b = a; b < nonzero.size(); ++b) cross(ia, nonzero[b].first) += va * nonzero[b].second;
        }
    }
    const double n = static_cast<double>(samples);
    const Vector mean = sum / n;
    double best = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < H; ++i) {
        for (Eigen::Index k = i; k < H; ++k) {
            const double cov = (cross(i, k) - n * mean(i) * mean(k)) / (n - 1.0);
            best = std::max(best, cov);
        }
    }
    return best;
}

double estimate_return_variance(const Mrp& m, const ReturnSpec& spec, const ValueFunction& v, StateIndex s,
                                std::size_t samples, std::uint64_t seed, std::size_t max_horizon) {
    check_samples(samples);
    const WeightSeq h = impulse_from_spec(spec);
    // Welford
    double mean = 0.0;
    double m2 = 0.0;
    for (std::size_t j = 0; j < samples; ++j) {
        const Trajectory traj = sample_trajectory(m, s, derive_seed(seed, j), max_horizon);
        const double g = forward_target(traj, 0, h, v, m.discount);
        const double d = g - mean;
        mean += d / static_cast<double>(j + 1);
        m2 += d * (g - mean);
    }
    return m2 / static_cast<double>(samples - 1);
}

VarianceReport check_bound_with_kappa(const Mrp& m, const ReturnSpec& spec, const ValueFunction& v,
                                      StateIndex s, double kappa, const VarianceOptions& options) {
    const WeightSeq h = impulse_from_spec(spec);
    const Classification cls = classify(h, m.discount);
    if (!cls.is_convex) throw NonConvexSpec(spec_label(spec) + " is not a convex return; the bound does not apply");

    VarianceReport report;
    report.spec = spec_label(spec);
    report.state = s;
    report.kappa = kappa;
    report.modulus = cls.modulus;
    report.samples = options.samples;
    report.bound = variance_bound(std::min(cls.modulus, 1.0), m.discount, std::max(kappa, 0.0));
    report.empirical_variance = estimate_return_variance(m, spec, v, s, options.samples,
                                                         derive_seed(options.seed, kVarianceStream),
                                                         options.max_horizon);
    report.satisfied = report.empirical_variance <= report.bound * (1.0 + options.slack);
    return report;
}

VarianceReport check_bound(const Mrp& m, const ReturnSpec& spec, const ValueFunction& v, StateIndex s,
                           const VarianceOptions& options) {
    // Classify before sampling so a non-convex spec fails fast.
    if (!classify(impulse_from_spec(spec), m.discount).is_convex) {
        throw NonConvexSpec(spec_label(spec) + " is not a convex return; the bound does not apply");
    }
    const double kappa = estimate_kappa(m, v, s, options.horizon, options.samples,
                                        derive_seed(options.seed, kKappaStream));
    return check_bound_with_kappa(m, spec, v, s, kappa, options);
}

void write_variance_csv(std::ostream& out, const std::vector<VarianceReport>& reports) {
    out << "spec,state,var,bound,kappa,samples,satisfied\n";
    for (const auto& r : reports) {
        out << r.spec << ',' << r.state << ',' << format_double(r.empirical_variance) << ','
            << format_double(r.bound) << ',' << format_double(r.kappa) << ',' << r.samples << ','
            << (r.satisfied ? "true" : "false") << '\n';
    }
}

}  // namespace recency
