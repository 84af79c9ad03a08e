#pragma once

#include <cstddef>
#include <limits>
#include <string>

#include "picard/errors.hpp"

namespace picard {

/// Picard iterate order n >= 0, or the limit (the strong solution).
class Order {
 public:
  [[nodiscard]] static constexpr Order limit() noexcept { return Order(kLimit); }
  [[nodiscard]] static Order iterate(std::size_t n) {
    if (n == kLimit) throw DomainError("iterate order out of range");
    return Order(n);
  }

  [[nodiscard]] constexpr bool is_limit() const noexcept { return n_ == kLimit; }
  /// Iterate order; only meaningful when !is_limit().
  [[nodiscard]] constexpr std::size_t n() const noexcept { return n_; }

  /// Iterate order actually distinct on a grid with `steps` steps: from n = steps
  /// on, the grid Picard map has reached its fixed point.
  [[nodiscard]] constexpr bool reaches_fixed_point(std::size_t steps) const noexcept {
    return is_limit() || n_ >= steps;
  }

  [[nodiscard]] std::string label() const { return is_limit() ? std::string("limit") : std::to_string(n_); }

  friend constexpr bool operator==(Order, Order) noexcept = default;

 private:
  static constexpr std::size_t kLimit = std::numeric_limits<std::size_t>::max();
  constexpr explicit Order(std::size_t n) noexcept : n_(n) {}
  std::size_t n_;
};

}  // namespace picard
