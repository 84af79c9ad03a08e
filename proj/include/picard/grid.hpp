#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "picard/errors.hpp"

namespace picard {

/// Uniform grid 0 = t_0 < t_1 < ... < t_N = T.
class TimeGrid {
 public:
  TimeGrid(double horizon, std::size_t steps) : horizon_(horizon), steps_(steps) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
      throw DomainError("time grid horizon must be a positive finite number");
    }
    if (steps == 0) {
      throw DomainError("time grid needs at least one step");
    }
    dt_ = horizon_ / static_cast<double>(steps_);
  }

  [[nodiscard]] double horizon() const noexcept { return horizon_; }
  [[nodiscard]] std::size_t steps() const noexcept { return steps_; }
  [[nodiscard]] std::size_t knots() const noexcept { return steps_ + 1; }
  [[nodiscard]] double dt() const noexcept { return dt_; }

  [[nodiscard]] double time(std::size_t i) const noexcept {
    return i >= steps_ ? horizon_ : static_cast<double>(i) * dt_;
  }

  friend bool operator==(const TimeGrid& a, const TimeGrid& b) noexcept {
    return a.horizon_ == b.horizon_ && a.steps_ == b.steps_;
  }

 private:
  double horizon_;
  std::size_t steps_;
  double dt_;
};

/// Values of a continuous path sampled at every knot of a grid.
class Path {
 public:
  explicit Path(const TimeGrid& grid) : grid_(grid), values_(grid.knots(), 0.0) {}

  Path(const TimeGrid& grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.knots()) {
      throw DimensionError("path has " + std::to_string(values_.size()) + " values, grid has " +
                           std::to_string(grid_.knots()) + " knots");
    }
  }

  [[nodiscard]] const TimeGrid& grid() const noexcept { return grid_; }
  [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
  [[nodiscard]] std::span<double> values() noexcept { return values_; }

  [[nodiscard]] double operator[](std::size_t i) const noexcept { return values_[i]; }
  [[nodiscard]] double& operator[](std::size_t i) noexcept { return values_[i]; }
  [[nodiscard]] double terminal() const noexcept { return values_.back(); }

  friend bool operator==(const Path& a, const Path& b) noexcept {
    return a.grid_ == b.grid_ && a.values_ == b.values_;
  }

 private:
  TimeGrid grid_;
  std::vector<double> values_;
};

}  // namespace picard
