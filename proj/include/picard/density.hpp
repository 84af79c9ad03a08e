#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "picard/errors.hpp"
#include "picard/functional.hpp"
#include "picard/grid.hpp"
#include "picard/message.hpp"
#include "picard/order.hpp"
#include "picard/rng.hpp"
#include "picard/solver.hpp"

namespace picard {

/// Fixed vocabulary of path measures that densities are taken between.
namespace measure {

[[nodiscard]] inline std::string wiener() { return "mu_W"; }
[[nodiscard]] inline std::string message_times_wiener() { return "mu_xi x mu_W"; }

/// Law of the output given the message, mu_{Y^x} or mu_{Y^x,(n)}.
[[nodiscard]] inline std::string fixed_message(Order order) {
  return order.is_limit() ? "mu_{Y^x}" : "mu_{Y^x,(" + order.label() + ")}";
}
/// Marginal law of the output, mu_Y or mu_{Y^(n)}.
[[nodiscard]] inline std::string output(Order order) {
  return order.is_limit() ? "mu_Y" : "mu_{Y^(" + order.label() + ")}";
}
/// Joint law of message and output.
[[nodiscard]] inline std::string joint(Order order) {
  return order.is_limit() ? "mu_{xi,Y}" : "mu_{xi,Y^(" + order.label() + ")}";
}

}  // namespace measure

/// log(d numerator / d denominator) at one path, in nats.
struct LogDensity {
  double value = 0.0;
  std::string numerator;
  std::string denominator;
  std::uint64_t path_id = 0;
  /// Inner message draws behind the value; 0 for fixed-message densities.
  std::size_t n_inner = 0;
};

/// log((1/n) sum exp(v_k)), shifted by the largest exponent.
[[nodiscard]] inline double log_mean_exp(std::span<const double> v) {
  if (v.empty()) throw DomainError("log_mean_exp of an empty sample");
  const double top = *std::ranges::max_element(v);
  if (top == -std::numeric_limits<double>::infinity()) {
    throw NumericError("degenerate mixture: every inner exponent is -inf");
  }
  if (!std::isfinite(top)) throw NumericError("mixture exponent is not finite");
  double sum = 0.0;
  for (double e : v) sum += std::exp(e - top);
  return top + std::log(sum) - std::log(static_cast<double>(v.size()));
}

/// Reusable evaluator of Girsanov exponents for one unit-diffusion drift on one grid.
///
/// Not thread-safe; give each worker its own.
class DensityWorkspace {
 public:
  DensityWorkspace(const DriftFunctional& f, const TimeGrid& grid)
      : grid_(grid), limit_(f.sweep(grid)), inverter_(f, grid), message_(grid.knots()) {}

  [[nodiscard]] const TimeGrid& grid() const noexcept { return grid_; }

  /// sum f(i, x, y) dy_i - 1/2 sum f(i, x, y)^2 dt, drift read along y itself.
  [[nodiscard]] double fixed(std::span<const double> x, std::span<const double> y) {
    check(y);
    double ito = 0.0, energy = 0.0;
    for (std::size_t i = 0; i < grid_.steps(); ++i) {
      const double d = limit_(i, x, y);
      ito += d * (y[i + 1] - y[i]);
      energy += d * d;
    }
    return ito - 0.5 * energy * grid_.dt();
  }

  /// Same exponent with the drift read along Y^{x,(n-1)} rebuilt from (x, y).
  [[nodiscard]] double fixed(std::span<const double> x, std::span<const double> y, Order order) {
    if (order.reaches_fixed_point(grid_.steps())) return fixed(x, y);
    check(y);
    double ito = 0.0, energy = 0.0;
    inverter_.run(x, y, order, [&](std::size_t i, double d, double) {
      ito += d * (y[i + 1] - y[i]);
      energy += d * d;
    });
    return ito - 0.5 * energy * grid_.dt();
  }

  /// log-mean-exp over n_inner fresh messages x' ~ law of the fixed-message exponent at y.
  [[nodiscard]] double mixture(std::span<const double> y, const MessageLaw& law, std::size_t n_inner, Order order,
                               RngStream& rng) {
    if (n_inner == 0) throw DomainError("mixture density needs n_inner >= 1");
    exponents_.resize(n_inner);
    for (std::size_t k = 0; k < n_inner; ++k) {
      law.sample_into(grid_, rng, message_);
      exponents_[k] = fixed(message_, y, order);
    }
    return log_mean_exp(exponents_);
  }

 private:
  void check(std::span<const double> y) const {
    if (y.size() != grid_.knots()) throw DimensionError("density: path does not match grid");
  }

  TimeGrid grid_;
  DriftSweep limit_;
  NoiseInverter inverter_;
  std::vector<double> message_;
  std::vector<double> exponents_;
};

/// log dmu_{Y^x}/dmu_W at y (unit diffusion; reduce the drift first otherwise).
[[nodiscard]] inline LogDensity log_density_fixed_message(const DriftFunctional& f, const Path& x, const Path& y,
                                                          std::uint64_t path_id = 0) {
  if (!(x.grid() == y.grid())) throw DimensionError("message and output paths live on different grids");
  DensityWorkspace ws(f, y.grid());
  return {ws.fixed(x.values(), y.values()), measure::fixed_message(Order::limit()), measure::wiener(), path_id, 0};
}

/// log dmu_{Y^x,(n)}/dmu_W at y.
[[nodiscard]] inline LogDensity log_density_fixed_message_iterate(const DriftFunctional& f, const Path& x,
                                                                  const Path& y, std::size_t n,
                                                                  std::uint64_t path_id = 0) {
  if (n < 1) throw DomainError("iterate density needs n >= 1");
  if (!(x.grid() == y.grid())) throw DimensionError("message and output paths live on different grids");
  DensityWorkspace ws(f, y.grid());
  const Order order = Order::iterate(n);
  return {ws.fixed(x.values(), y.values(), order), measure::fixed_message(order), measure::wiener(), path_id, 0};
}

/// log dmu_{Y^(n)}/dmu_W (or log dmu_Y/dmu_W) at y through a message mixture.
[[nodiscard]] inline LogDensity log_mixture_density(const DriftFunctional& f, const Path& y, const MessageLaw& law,
                                                    std::size_t n_inner, Order order, RngStream& rng,
                                                    std::uint64_t path_id = 0) {
  if (!order.is_limit() && order.n() < 1) throw DomainError("iterate density needs n >= 1");
  DensityWorkspace ws(f, y.grid());
  return {ws.mixture(y.values(), law, n_inner, order, rng), measure::output(order), measure::wiener(), path_id,
          n_inner};
}

/// log dmu_{xi,Y}/d(mu_xi x mu_W) at (x, y): the fixed-message density at the actual message.
[[nodiscard]] inline LogDensity joint_log_density(const DriftFunctional& f, const Path& x, const Path& y, Order order,
                                                  std::uint64_t path_id = 0) {
  if (!order.is_limit() && order.n() < 1) throw DomainError("iterate density needs n >= 1");
  if (!(x.grid() == y.grid())) throw DimensionError("message and output paths live on different grids");
  DensityWorkspace ws(f, y.grid());
  return {ws.fixed(x.values(), y.values(), order), measure::joint(order), measure::message_times_wiener(), path_id,
          0};
}

}  // namespace picard
