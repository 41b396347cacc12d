#pragma once

#include <span>
#include <vector>

namespace departnet {

// Correctly rounded sum of doubles (Shewchuk partials, as in Python's math.fsum).
double exact_sum(std::span<const double> values);

class ExactAccumulator {
public:
    void add(double x);
    [[nodiscard]] double value() const;

private:
    std::vector<double> partials_;
};

double mean(std::span<const double> values);
// Population variance (denominator n).
double variance(std::span<const double> values);
// Linear-interpolation quantile (R type 7) of unsorted data; q in [0, 1].
double quantile(std::vector<double> values, double q);

}  // namespace departnet
