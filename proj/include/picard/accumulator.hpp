#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

namespace picard {

/// Count, running sum and running sum of squares of a sample.
class Accumulator {
 public:
  void add(double x) noexcept {
    ++count_;
    sum_ += x;
    sum_sq_ += x * x;
  }

  void merge(const Accumulator& other) noexcept {
    count_ += other.count_;
    sum_ += other.sum_;
    sum_sq_ += other.sum_sq_;
  }

  [[nodiscard]] std::size_t count() const noexcept { return count_; }
  [[nodiscard]] double sum() const noexcept { return sum_; }
  [[nodiscard]] double sum_of_squares() const noexcept { return sum_sq_; }

  [[nodiscard]] double mean() const noexcept {
    return count_ == 0 ? std::numeric_limits<double>::quiet_NaN() : sum_ / static_cast<double>(count_);
  }

  /// sqrt((sum x^2 / n - mean^2) / (n - 1)); zero for fewer than two samples.
  [[nodiscard]] double std_error() const noexcept {
    if (count_ < 2) {
      return 0.0;
    }
    const double n = static_cast<double>(count_);
    const double m = sum_ / n;
    const double spread = std::max(0.0, sum_sq_ / n - m * m);
    return std::sqrt(spread / (n - 1.0));
  }

 private:
  std::size_t count_ = 0;
  double sum_ = 0.0;
  double sum_sq_ = 0.0;
};

}  // namespace picard
