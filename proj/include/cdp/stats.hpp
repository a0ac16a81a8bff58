#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace cdp {

/// sqrt(p(1-p)/n), the standard error of a proportion from n trials.
inline double binomial_stderr(double p, double n) {
  if (n <= 0.0) return 0.0;
  return std::sqrt(std::max(0.0, p * (1.0 - p)) / n);
}

/// Running sum of values; mean and standard error of the mean.
struct MeanAccumulator {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::uint64_t n = 0;

  void add(double x) {
    sum += x;
    sum_sq += x * x;
    ++n;
  }
  double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
  double stderr_of_mean() const {
    if (n < 2) return 0.0;
    const double m = mean();
    const double var = (sum_sq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1);
    return std::sqrt(std::max(0.0, var) / static_cast<double>(n));
  }
};

}  // namespace cdp
