#include "departnet/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace departnet {

void ExactAccumulator::add(double x) {
    std::size_t used = 0;
    for (double y : partials_) {
        if (std::fabs(x) < std::fabs(y)) std::swap(x, y);
        const double hi = x + y;
        const double lo = y - (hi - x);
        if (lo != 0.0) partials_[used++] = lo;
        x = hi;
    }
    partials_.resize(used);
    partials_.push_back(x);
}

double ExactAccumulator::value() const {
    if (partials_.empty()) return 0.0;
    auto n = partials_.size();
    double hi = partials_[--n];
    double lo = 0.0;
    while (n > 0) {
        const double x = hi;
        const double y = partials_[--n];
        hi = x + y;
        const double yr = hi - x;
        lo = y - yr;
        if (lo != 0.0) break;
    }
    // Round-half-even correction when the remaining partials push past a tie.
    if (n > 0 && ((lo < 0.0 && partials_[n - 1] < 0.0) || (lo > 0.0 && partials_[n - 1] > 0.0))) {
        const double y = lo * 2.0;
        const double x = hi + y;
        if (y == x - hi) hi = x;
    }
    return hi;
}

double exact_sum(std::span<const double> values) {
    ExactAccumulator acc;
    for (double v : values) acc.add(v);
    return acc.value();
}

double mean(std::span<const double> values) {
    if (values.empty()) return 0.0;
    return exact_sum(values) / static_cast<double>(values.size());
}

double variance(std::span<const double> values) {
    if (values.empty()) return 0.0;
    const double m = mean(values);
    ExactAccumulator acc;
    for (double v : values) acc.add((v - m) * (v - m));
    return acc.value() / static_cast<double>(values.size());
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("quantile of empty data");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace departnet
