#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "recency/mrp.hpp"
#include "recency/weights.hpp"

namespace recency {

/// Expected-update operator of a linear return with TD-error weights h:
///
///     H v = v + sum_i h_i (gamma P)^i (T v - v)
///
/// The prefix is summed term by term. The periodic-geometric tail is summed in
/// closed form through one solve with (I - ratio (gamma P)^period), factored
/// once at construction.
class ExpectedOperator {
public:
    ExpectedOperator(const Mrp& m, WeightSeq h);

    ValueFunction apply(const ValueFunction& v) const;
    const Mrp& mrp() const noexcept { return mrp_; }

private:
    Mrp mrp_;
    WeightSeq h_;
    Matrix step_;  ///< gamma P
    std::optional<Eigen::PartialPivLU<Matrix>> tail_solver_;
};

/// H v in TD-error form. `h` must be indexed from 0.
ValueFunction apply_operator(const Mrp& m, const WeightSeq& h, const ValueFunction& v);

/// H v = (1 - sum c_n) v + sum c_n T^n v, with n-step weights `c` indexed from 1.
/// The tail uses T^n v = v_pi + (gamma P)^n (v - v_pi).
ValueFunction apply_operator_nstep_form(const Mrp& m, const WeightSeq& c, const ValueFunction& v);

enum class Verdict { Converged, Diverged, Exhausted };

const char* to_string(Verdict v) noexcept;

struct IterationRecord {
    std::size_t iteration = 0;
    ValueFunction values;
    double distance = 0.0;  ///< max-norm distance to v_pi
};

struct IterationTrace {
    std::vector<IterationRecord> records;
    Verdict verdict = Verdict::Exhausted;
    double conv_tol = 0.0;
    double div_threshold = 0.0;

    const IterationRecord& last() const { return records.back(); }
};

struct IterateOptions {
    double step = 1.0;
    std::size_t max_iters = 10'000;
    double conv_tol = 1e-10;
    double div_threshold = 1e6;
};

/// Synchronous expected updates v <- v + step (H v - v), starting at v0.
/// Records iteration 0 (the start) and every update until the distance to
/// v_pi drops to conv_tol, reaches div_threshold, or max_iters updates ran.
IterationTrace iterate(const Mrp& m, const WeightSeq& h, const ValueFunction& v0,
                       const IterateOptions& options = {});

struct Grid {
    double min = -2.0;
    double max = 2.0;
    std::size_t points = 21;
};

struct FieldRow {
    double v1, v2, d1, d2;
};

/// Unit expected-update directions (H v - v) / |H v - v|_2 over a square grid
/// for a two-state MRP. Rows iterate v1 in the outer loop. Directions with
/// norm below 1e-12 are reported as zero.
std::vector<FieldRow> update_field(const Mrp& m, const WeightSeq& h, const Grid& grid = {});

/// Largest sampled |H v - H v'|_inf / |v - v'|_inf over random pairs drawn
/// uniformly from [-1, 1]^n (non-terminal entries). Pair k uses stream
/// derive_seed(seed, k).
double empirical_modulus(const Mrp& m, const WeightSeq& h, std::size_t pairs, std::uint64_t seed);

}  // namespace recency
