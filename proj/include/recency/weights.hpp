#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace recency {

/// A real sequence w_k, k >= first_index, held as a finite prefix followed by
/// an analytic periodic-geometric tail:
///
///     w[first + L + q*P + k] = ratio^q * pattern[k],   0 <= k < P, q >= 0
///
/// where L is the prefix length and P the pattern length. An empty pattern is
/// the zero tail; P = 1 is an ordinary geometric tail. The same container
/// holds TD-error weights h (indexed from 0) and n-step weights c (indexed
/// from 1).
///
/// ratio lies in [0, 1]. ratio = 1 with a nonzero pattern is a non-vanishing
/// tail (e.g. the Monte Carlo lambda = 1 case): its entries and discounted
/// sums are defined, its plain sum is not.
class WeightSeq {
public:
    enum class TailKind { Zero, Geometric, Periodic };

    WeightSeq() = default;

    static WeightSeq finite(std::vector<double> prefix, std::size_t first_index = 0);
    static WeightSeq geometric(std::vector<double> prefix, double ratio, double coefficient,
                               std::size_t first_index = 0);
    static WeightSeq periodic(std::vector<double> prefix, double ratio, std::vector<double> pattern,
                              std::size_t first_index = 0);

    /// Entry at absolute index i; zero for i < first_index.
    double operator[](std::size_t i) const;
    /// Entries first_index .. first_index + count - 1.
    std::vector<double> take(std::size_t count) const;

    std::size_t first_index() const noexcept { return first_; }
    std::span<const double> prefix() const noexcept { return prefix_; }
    std::span<const double> pattern() const noexcept { return pattern_; }
    double ratio() const noexcept { return ratio_; }
    std::size_t period() const noexcept { return pattern_.size(); }
    TailKind tail_kind() const noexcept;
    /// First absolute index covered by the tail.
    std::size_t tail_start() const noexcept { return first_ + prefix_.size(); }

    /// True when entries tend to zero (zero tail or ratio < 1).
    bool vanishes() const noexcept;

    /// Sum of all entries. Throws std::domain_error for a non-vanishing tail.
    double sum() const;
    /// Sum of w_k * gamma^k over absolute indices k.
    double discounted_sum(double gamma) const;
    /// Sum of |w_k| * gamma^k over absolute indices k.
    double discounted_abs_sum(double gamma) const;

    /// Infimum over all entries (0 is included for vanishing sequences).
    double min_entry() const;

    /// Index bound past which every entry has magnitude <= eps.
    std::size_t support_bound(double eps) const;

private:
    std::vector<double> prefix_;
    std::vector<double> pattern_;
    double ratio_ = 0.0;
    std::size_t first_ = 0;
};

}  // namespace recency
