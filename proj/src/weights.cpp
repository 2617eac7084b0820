#include "recency/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace recency {

namespace {

bool all_zero(const std::vector<double>& xs) {
    return std::all_of(xs.begin(), xs.end(), [](double x) { return x == 0.0; });
}

void check_finite(const std::vector<double>& xs) {
    for (double x : xs) {
        if (!std::isfinite(x)) throw std::invalid_argument("weight sequence entries must be finite");
    }
}

}  // namespace

WeightSeq WeightSeq::finite(std::vector<double> prefix, std::size_t first_index) {
    return periodic(std::move(prefix), 0.0, {}, first_index);
}

WeightSeq WeightSeq::geometric(std::vector<double> prefix, double ratio, double coefficient,
                               std::size_t first_index) {
    return periodic(std::move(prefix), ratio, {coefficient}, first_index);
}

WeightSeq WeightSeq::periodic(std::vector<double> prefix, double ratio, std::vector<double> pattern,
                              std::size_t first_index) {
    if (!(ratio >= 0.0 && ratio <= 1.0)) {
        throw std::invalid_argument("tail ratio must lie in [0, 1]");
    }
    check_finite(prefix);
    check_finite(pattern);
    WeightSeq w;
    w.prefix_ = std::move(prefix);
    // A tail of zeros is the zero tail.
    if (!all_zero(pattern)) {
        w.pattern_ = std::move(pattern);
        w.ratio_ = ratio;
    }
    w.first_ = first_index;
    return w;
}

WeightSeq::TailKind WeightSeq::tail_kind() const noexcept {
    if (pattern_.empty()) return TailKind::Zero;
    return pattern_.size() == 1 ? TailKind::Geometric : TailKind::Periodic;
}

double WeightSeq::operator[](std::size_t i) const {
    if (i < first_) return 0.0;
    const std::size_t k = i - first_;
    if (k < prefix_.size()) return prefix_[k];
    if (pattern_.empty()) return 0.0;
    const std::size_t j = k - prefix_.size();
    const std::size_t q = j / pattern_.size();
    const double scale = q == 0 ? 1.0 : std::pow(ratio_, static_cast<double>(q));
    return scale * pattern_[j % pattern_.size()];
}

std::vector<double> WeightSeq::take(std::size_t count) const {
    std::vector<double> out(count);
    for (std::size_t k = 0; k < count; ++k) out[k] = (*this)[first_ + k];
    return out;
}

bool WeightSeq::vanishes() const noexcept { return pattern_.empty() || ratio_ < 1.0; }

double WeightSeq::sum() const {
    if (!vanishes()) throw std::domain_error("sum of a non-vanishing weight sequence diverges");
    double total = 0.0;
    for (double x : prefix_) total += x;
    if (!pattern_.empty()) {
        double period_sum = 0.0;
        for (double x : pattern_) period_sum += x;
        total += period_sum / (1.0 - ratio_);
    }
    return total;
}

namespace {

template <typename F>
double discounted(const WeightSeq& w, double gamma, F&& fn) {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("discount must lie in [0, 1)");
    double total = 0.0;
    double power = std::pow(gamma, static_cast<double>(w.first_index()));
    for (double x : w.prefix()) {
        total += fn(x) * power;
        power *= gamma;
    }
    if (w.period() > 0) {
        double period_sum = 0.0;
        double inner = 1.0;
        for (double x : w.pattern()) {
            period_sum += fn(x) * inner;
            inner *= gamma;
        }
        // inner == gamma^P here
        total += power * period_sum / (1.0 - w.ratio() * inner);
    }
    return total;
}

}  // namespace

double WeightSeq::discounted_sum(double gamma) const {
    return discounted(*this, gamma, [](double x) { return x; });
}

double WeightSeq::discounted_abs_sum(double gamma) const {
    return discounted(*this, gamma, [](double x) { return std::abs(x); });
}

double WeightSeq::min_entry() const {
    // Later tail periods are scaled by ratio^q <= 1, so the first period holds
    // the most negative tail entries; a vanishing tail has infimum <= 0.
    double lo = vanishes() ? 0.0 : std::numeric_limits<double>::infinity();
    for (double x : prefix_) lo = std::min(lo, x);
    for (double x : pattern_) lo = std::min(lo, x);
    return lo;
}

std::size_t WeightSeq::support_bound(double eps) const {
    const std::size_t base = tail_start();
    if (pattern_.empty()) return base;
    double peak = 0.0;
    for (double x : pattern_) peak = std::max(peak, std::abs(x));
    if (peak <= eps) return base;
    if (ratio_ == 0.0) return base + pattern_.size();
    if (ratio_ >= 1.0) return std::numeric_limits<std::size_t>::max();
    // smallest q with ratio^q * peak <= eps
    const double periods = std::ceil(std::log(eps / peak) / std::log(ratio_));
    return base + static_cast<std::size_t>(periods + 1.0) * pattern_.size();
}

}  // namespace recency
