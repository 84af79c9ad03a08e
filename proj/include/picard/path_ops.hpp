#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>

#include "picard/errors.hpp"
#include "picard/grid.hpp"
#include "picard/rng.hpp"

namespace picard {

/// Fills `out` (one value per knot) with a standard Brownian path, W(0) = 0.
inline void sample_brownian_into(const TimeGrid& grid, RngStream& rng, std::span<double> out) {
  if (out.size() != grid.knots()) {
    throw DimensionError("brownian buffer does not match grid");
  }
  const double scale = std::sqrt(grid.dt());
  out[0] = 0.0;
  for (std::size_t i = 0; i < grid.steps(); ++i) {
    out[i + 1] = out[i] + scale * rng.normal();
  }
}

[[nodiscard]] inline Path sample_brownian(const TimeGrid& grid, RngStream& rng) {
  Path w(grid);
  sample_brownian_into(grid, rng, w.values());
  return w;
}

/// Left-point Ito sum  sum_i h_i (y_{i+1} - y_i).  `h` holds one value per increment.
[[nodiscard]] inline double ito_integral(std::span<const double> h, std::span<const double> y) {
  if (y.empty() || h.size() + 1 != y.size()) {
    throw DimensionError("ito_integral: integrand has " + std::to_string(h.size()) +
                         " values for a path with " + std::to_string(y.size()) + " knots");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    acc += h[i] * (y[i + 1] - y[i]);
  }
  return acc;
}

[[nodiscard]] inline double ito_integral(std::span<const double> h, const Path& y) {
  return ito_integral(h, y.values());
}

/// Left-point rule  sum_{i<N} h_i dt.  Accepts one value per increment or per knot
/// (the terminal knot value is then ignored).
[[nodiscard]] inline double quadrature(std::span<const double> h, const TimeGrid& grid) {
  if (h.size() != grid.steps() && h.size() != grid.knots()) {
    throw DimensionError("quadrature: integrand length " + std::to_string(h.size()) +
                         " does not match grid with " + std::to_string(grid.steps()) + " steps");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < grid.steps(); ++i) {
    acc += h[i];
  }
  return acc * grid.dt();
}

/// max_{j <= up_to} |y_j|
[[nodiscard]] inline double sup_norm(std::span<const double> y, std::size_t up_to) {
  if (up_to >= y.size()) {
    throw DimensionError("sup_norm: knot " + std::to_string(up_to) + " outside path of " +
                         std::to_string(y.size()) + " knots");
  }
  double m = 0.0;
  for (std::size_t j = 0; j <= up_to; ++j) {
    m = std::max(m, std::abs(y[j]));
  }
  return m;
}

[[nodiscard]] inline double sup_norm(const Path& y, std::size_t up_to) { return sup_norm(y.values(), up_to); }
[[nodiscard]] inline double sup_norm(const Path& y) { return sup_norm(y.values(), y.size() - 1); }

/// sup-norm of the difference of two equally sized paths.
[[nodiscard]] inline double sup_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionError("sup_distance: paths differ in length");
  }
  double m = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    m = std::max(m, std::abs(a[j] - b[j]));
  }
  return m;
}

}  // namespace picard
