#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "picard/accumulator.hpp"
#include "picard/errors.hpp"
#include "picard/functional.hpp"
#include "picard/grid.hpp"
#include "picard/message.hpp"
#include "picard/order.hpp"
#include "picard/parallel.hpp"
#include "picard/path_ops.hpp"
#include "picard/rng.hpp"

namespace picard {

namespace detail {

inline void require_same_grid(const Path& a, const Path& b, const char* what) {
  if (!(a.grid() == b.grid())) throw DimensionError(std::string(what) + ": paths live on different grids");
}

inline void require_finite_state(double v, std::size_t knot) {
  if (!std::isfinite(v)) {
    throw NumericError("Picard iterate diverged at knot " + std::to_string(knot), knot);
  }
}

// out[i+1] = out[i] + f(i, x, prev) dt + g(i, prev) (w[i+1] - w[i]);  g == nullptr means g == 1.
inline void picard_sweep(DriftSweep& f, DriftSweep* g, const TimeGrid& grid, std::span<const double> x,
                         std::span<const double> prev, std::span<const double> w, std::span<double> out) {
  const double dt = grid.dt();
  out[0] = 0.0;
  for (std::size_t i = 0; i < grid.steps(); ++i) {
    const double dw = w[i + 1] - w[i];
    const double drift = f(i, x, prev);
    const double noise = g == nullptr ? dw : (*g)(i, {}, prev) * dw;
    out[i + 1] = out[i] + drift * dt + noise;
    require_finite_state(out[i + 1], i + 1);
  }
}

// Euler chain out[i+1] = out[i] + f(i, x, out) dt + g(i, out) dw: the fixed point
// of the grid Picard map, reached by the iteration after `steps` sweeps.
inline void fixed_point_sweep(DriftSweep& f, DriftSweep* g, const TimeGrid& grid, std::span<const double> x,
                              std::span<const double> w, std::span<double> out) {
  const double dt = grid.dt();
  out[0] = 0.0;
  for (std::size_t i = 0; i < grid.steps(); ++i) {
    const double dw = w[i + 1] - w[i];
    const double drift = f(i, x, out);
    const double noise = g == nullptr ? dw : (*g)(i, {}, out) * dw;
    out[i + 1] = out[i] + drift * dt + noise;
    require_finite_state(out[i + 1], i + 1);
  }
}

}  // namespace detail

/// One Picard step: the iterate driven by (x, W) with drift and diffusion read
/// along y_prev.
[[nodiscard]] inline Path picard_step(const DriftFunctional& f, const DiffusionFunctional& g, const Path& x,
                                      const Path& y_prev, const Path& w) {
  detail::require_same_grid(x, y_prev, "picard_step");
  detail::require_same_grid(x, w, "picard_step");
  const TimeGrid& grid = w.grid();
  Path out(grid);
  auto fs = f.sweep(grid);
  std::optional<DriftSweep> gs;
  if (!g.is_unit()) gs.emplace(g.sweep(grid));
  detail::picard_sweep(fs, gs ? &*gs : nullptr, grid, x.values(), y_prev.values(), w.values(), out.values());
  return out;
}

/// Fixed point of the grid Picard map (the Euler-Maruyama chain).
[[nodiscard]] inline Path fixed_point(const DriftFunctional& f, const DiffusionFunctional& g, const Path& x,
                                      const Path& w) {
  detail::require_same_grid(x, w, "fixed_point");
  const TimeGrid& grid = w.grid();
  Path out(grid);
  auto fs = f.sweep(grid);
  std::optional<DriftSweep> gs;
  if (!g.is_unit()) gs.emplace(g.sweep(grid));
  detail::fixed_point_sweep(fs, gs ? &*gs : nullptr, grid, x.values(), w.values(), out.values());
  return out;
}

/// Reusable buffers for producing iterates of one (f, g) pair on one grid.
class IterateBuilder {
 public:
  IterateBuilder(const DriftFunctional& f, const DiffusionFunctional& g, const TimeGrid& grid)
      : grid_(grid), f_(f.sweep(grid)), scratch_(grid.knots()) {
    if (!g.is_unit()) g_.emplace(g.sweep(grid));
  }

  /// Writes Y^(n) (or the limit) driven by (x, w) into out.
  void build(std::span<const double> x, std::span<const double> w, Order order, std::span<double> out) {
    DriftSweep* g = g_ ? &*g_ : nullptr;
    if (order.reaches_fixed_point(grid_.steps())) {
      detail::fixed_point_sweep(f_, g, grid_, x, w, out);
      return;
    }
    std::ranges::fill(out, 0.0);
    for (std::size_t k = 1; k <= order.n(); ++k) {
      std::ranges::copy(out, scratch_.begin());
      detail::picard_sweep(f_, g, grid_, x, scratch_, w, out);
    }
  }

 private:
  TimeGrid grid_;
  DriftSweep f_;
  std::optional<DriftSweep> g_;
  std::vector<double> scratch_;
};

/// Y^(n) or the limit driven by (x, W).
[[nodiscard]] inline Path iterate(const DriftFunctional& f, const DiffusionFunctional& g, const Path& x,
                                  const Path& w, Order order) {
  detail::require_same_grid(x, w, "iterate");
  Path out(w.grid());
  IterateBuilder(f, g, w.grid()).build(x.values(), w.values(), order, out.values());
  return out;
}

/// One coupled draw of the iteration: iterates 0..n_max and a reference, all
/// driven by the same (x, W).
struct IterationBundle {
  Path message;
  Path noise;
  std::vector<Path> iterates;
  Path reference;
  std::size_t reference_order;

  [[nodiscard]] const TimeGrid& grid() const noexcept { return noise.grid(); }
};

/// Draws x ~ law then W from `rng` and runs the recursion up to n_max + extra;
/// the last iterate is the reference.
[[nodiscard]] inline IterationBundle run_iteration(const DriftFunctional& f, const DiffusionFunctional& g,
                                                   const MessageLaw& law, const TimeGrid& grid, std::size_t n_max,
                                                   RngStream& rng, std::size_t extra = 10) {
  if (n_max < 1) throw DomainError("run_iteration needs n_max >= 1");
  Path x = law.sample(grid, rng);
  Path w = sample_brownian(grid, rng);

  auto fs = f.sweep(grid);
  std::optional<DriftSweep> gs;
  if (!g.is_unit()) gs.emplace(g.sweep(grid));
  DriftSweep* gp = gs ? &*gs : nullptr;

  std::vector<Path> iterates;
  iterates.reserve(n_max + 1);
  iterates.emplace_back(grid);
  for (std::size_t k = 1; k <= n_max; ++k) {
    Path next(grid);
    if (k > grid.steps()) {
      // Past `steps` sweeps the grid iteration is stationary (bit-for-bit).
      next = iterates.back();
    } else {
      detail::picard_sweep(fs, gp, grid, x.values(), iterates.back().values(), w.values(), next.values());
    }
    iterates.push_back(std::move(next));
  }

  const std::size_t n_ref = n_max + extra;
  Path reference = iterates.back();
  Path scratch(grid);
  for (std::size_t k = n_max + 1; k <= std::min(n_ref, grid.steps()); ++k) {
    detail::picard_sweep(fs, gp, grid, x.values(), reference.values(), w.values(), scratch.values());
    std::swap(reference, scratch);
  }
  return {std::move(x), std::move(w), std::move(iterates), std::move(reference), n_ref};
}

/// Forward recursion recovering the driving noise of a unit-diffusion iterate.
///
/// Given (x, y) with y = Y^(n) driven by (x, W), knot by knot it recovers
/// dW_i = dy_i - f(i, x, Y^(n-1)) dt while rebuilding Y^(1..n-1) from the
/// recovered prefix of W. From n = steps on the order-n iterate coincides with
/// the fixed point and the recursion reads the drift along y itself.
class NoiseInverter {
 public:
  NoiseInverter(DriftFunctional f, const TimeGrid& grid) : f_(std::move(f)), grid_(grid) {}

  /// Calls visit(i, drift_i, dw_i) for i = 0..N-1, where drift_i = f(i, x, Y^(n-1)).
  template <class Visit>
  void run(std::span<const double> x, std::span<const double> y, Order order, Visit&& visit) {
    const std::size_t steps = grid_.steps();
    const double dt = grid_.dt();
    if (y.size() != grid_.knots()) throw DimensionError("noise inversion: path does not match grid");

    if (order.reaches_fixed_point(steps)) {
      ensure(1);
      DriftSweep& fs = sweeps_[0];
      for (std::size_t i = 0; i < steps; ++i) {
        const double d = fs(i, x, y);
        visit(i, d, (y[i + 1] - y[i]) - d * dt);
      }
      return;
    }

    const std::size_t n = order.n();
    if (n == 0) throw DomainError("noise inversion needs iterate order n >= 1");
    ensure(n);
    // levels_[k] holds Y^(k); levels_[0] stays zero.
    for (std::size_t k = 1; k < n; ++k) levels_[k][0] = 0.0;
    for (std::size_t i = 0; i < steps; ++i) {
      for (std::size_t k = 1; k <= n; ++k) drift_[k] = sweeps_[k - 1](i, x, levels_[k - 1]);
      const double dw = (y[i + 1] - y[i]) - drift_[n] * dt;
      visit(i, drift_[n], dw);
      for (std::size_t k = 1; k < n; ++k) {
        levels_[k][i + 1] = levels_[k][i] + drift_[k] * dt + dw;
        detail::require_finite_state(levels_[k][i + 1], i + 1);
      }
    }
  }

  /// Y^(n-1) rebuilt by the last run (only valid for orders below the grid size).
  [[nodiscard]] std::span<const double> previous(std::size_t n) const { return levels_.at(n - 1); }

 private:
  void ensure(std::size_t n) {
    while (sweeps_.size() < n) sweeps_.push_back(f_.sweep(grid_));
    while (levels_.size() < n) levels_.emplace_back(grid_.knots(), 0.0);
    if (drift_.size() < n + 1) drift_.resize(n + 1);
  }

  DriftFunctional f_;
  TimeGrid grid_;
  std::vector<DriftSweep> sweeps_;
  std::vector<std::vector<double>> levels_;
  std::vector<double> drift_;
};

/// Reconstructs W such that the order-n Picard iterate driven by (x, W) is y.
/// Unit diffusion only; reduce the drift first otherwise.
[[nodiscard]] inline Path invert_noise(const DriftFunctional& f, const Path& x, const Path& y, std::size_t n) {
  detail::require_same_grid(x, y, "invert_noise");
  if (n < 1) throw DomainError("invert_noise needs n >= 1");
  if (y[0] != 0.0) throw DomainError("invert_noise: path must start at 0");
  const TimeGrid& grid = y.grid();
  Path w(grid);
  NoiseInverter inv(f, grid);
  inv.run(x.values(), y.values(), Order::iterate(n),
          [&](std::size_t i, double, double dw) { w[i + 1] = w[i] + dw; });
  return w;
}

/// Monte Carlo statistics of the iteration over independent bundles.
struct IterationStatistics {
  /// successive[n] ~ E ||Y^(n+1) - Y^(n)||_T^2, n = 0..n_max-1.
  std::vector<Accumulator> successive;
  /// to_reference[n] ~ E ||Y^(n) - Y_ref||_T^2, n = 0..n_max.
  std::vector<Accumulator> to_reference;
  /// ||step(Y_ref) - Y_ref||_T^2, the fixed-point residual of the reference.
  Accumulator residual;
  std::size_t reference_order = 0;
};

/// Bundle j draws from RngStream(seed, j); blocks are merged in order, so the
/// result does not depend on `workers`.
[[nodiscard]] inline IterationStatistics iteration_statistics(const DriftFunctional& f, const DiffusionFunctional& g,
                                                              const MessageLaw& law, const TimeGrid& grid,
                                                              std::size_t n_max, std::size_t bundles,
                                                              std::uint64_t seed, std::size_t workers,
                                                              std::size_t extra = 10) {
  if (bundles == 0) throw DomainError("iteration_statistics needs at least one bundle");
  auto block = [&](std::size_t begin, std::size_t end) {
    IterationStatistics s;
    s.successive.resize(n_max);
    s.to_reference.resize(n_max + 1);
    for (std::size_t j = begin; j < end; ++j) {
      RngStream rng(seed, j);
      const IterationBundle b = run_iteration(f, g, law, grid, n_max, rng, extra);
      for (std::size_t n = 0; n < n_max; ++n) {
        const double d = sup_distance(b.iterates[n + 1].values(), b.iterates[n].values());
        s.successive[n].add(d * d);
      }
      for (std::size_t n = 0; n <= n_max; ++n) {
        const double d = sup_distance(b.iterates[n].values(), b.reference.values());
        s.to_reference[n].add(d * d);
      }
      const Path stepped = picard_step(f, g, b.message, b.reference, b.noise);
      const double r = sup_distance(stepped.values(), b.reference.values());
      s.residual.add(r * r);
      s.reference_order = b.reference_order;
    }
    return s;
  };
  const auto parts = run_blocks<IterationStatistics>(bundles, workers, block);
  IterationStatistics total = parts.front();
  for (std::size_t p = 1; p < parts.size(); ++p) {
    for (std::size_t n = 0; n < n_max; ++n) total.successive[n].merge(parts[p].successive[n]);
    for (std::size_t n = 0; n <= n_max; ++n) total.to_reference[n].merge(parts[p].to_reference[n]);
    total.residual.merge(parts[p].residual);
  }
  return total;
}

}  // namespace picard
