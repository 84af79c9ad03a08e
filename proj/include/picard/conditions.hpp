#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "picard/errors.hpp"
#include "picard/functional.hpp"
#include "picard/grid.hpp"
#include "picard/message.hpp"
#include "picard/path_ops.hpp"
#include "picard/rng.hpp"

namespace picard {

struct ProbeOptions {
  /// State paths are drawn with sup-norm up to about this size.
  double amplitude = 1.0;
  /// Relative slack before an empirical ratio counts as a violation.
  double tolerance = 1e-9;
};

/// Empirical maxima of the (L), (G), (B) ratios against the declared constants.
/// Probes falsify; a clean report is not a certificate.
struct ConditionReport {
  double K_hat = 0.0;
  double L_hat = 0.0;
  double M_hat = 0.0;
  Constants declared;
  std::size_t trials = 0;
  bool K_violated = false;
  bool L_violated = false;
  bool M_violated = false;

  [[nodiscard]] bool any_violation() const noexcept { return K_violated || L_violated || M_violated; }
};

namespace detail {

// Fills a probe state path: alternates constant levels, scaled Brownian paths,
// and Brownian paths with a random offset.
inline void draw_probe_path(const TimeGrid& grid, RngStream& rng, double amplitude, std::size_t kind,
                            std::span<double> out) {
  switch (kind % 3) {
    case 0: {
      const double level = amplitude * (2.0 * rng.uniform() - 1.0);
      std::ranges::fill(out, level);
      break;
    }
    case 1: {
      sample_brownian_into(grid, rng, out);
      const double scale = amplitude / std::max(1.0, 3.0 * std::sqrt(grid.horizon()));
      for (double& v : out) v *= scale;
      break;
    }
    default: {
      sample_brownian_into(grid, rng, out);
      const double offset = amplitude * (2.0 * rng.uniform() - 1.0);
      const double scale = 0.5 * amplitude / std::max(1.0, 3.0 * std::sqrt(grid.horizon()));
      for (double& v : out) v = std::clamp(offset + scale * v, -amplitude, amplitude);
      break;
    }
  }
}

}  // namespace detail

/// Samples (x, psi, psi~) triples and records the largest
///   (L): (|f(x,psi) - f(x,psi~)|^2 + |g(psi) - g(psi~)|^2) / sup_{s<=t} |psi - psi~|^2
///   (G): (|f(x,psi)|^2 + |g(psi)|^2) / (1 + sup_{s<=t}|x|^2 + sup_{s<=t}|psi|^2)
///   (B): int_0^T f^2(t, x, psi) dt
/// over every knot of every trial.
[[nodiscard]] inline ConditionReport probe_conditions(const DriftFunctional& f, const DiffusionFunctional& g,
                                                      const MessageLaw& law, const TimeGrid& grid,
                                                      std::size_t trials, RngStream& rng,
                                                      const ProbeOptions& options = {}) {
  if (trials == 0) throw DomainError("probe_conditions needs at least one trial");
  ConditionReport report;
  report.declared = f.constants();
  report.trials = trials;

  const std::size_t n = grid.knots();
  std::vector<double> x(n), psi(n), psi2(n);
  auto fs = f.sweep(grid);
  auto fs2 = f.sweep(grid);
  auto gs = g.sweep(grid);
  auto gs2 = g.sweep(grid);

  for (std::size_t trial = 0; trial < trials; ++trial) {
    law.sample_into(grid, rng, x);
    detail::draw_probe_path(grid, rng, options.amplitude, trial, psi);
    detail::draw_probe_path(grid, rng, options.amplitude, trial + 1, psi2);

    double sup_diff = 0.0, sup_x = 0.0, sup_psi = 0.0, energy = 0.0;
    for (std::size_t i = 0; i < grid.steps(); ++i) {
      sup_diff = std::max(sup_diff, std::abs(psi[i] - psi2[i]));
      sup_x = std::max(sup_x, std::abs(x[i]));
      sup_psi = std::max(sup_psi, std::abs(psi[i]));

      const double f1 = fs(i, x, psi);
      const double f2 = fs2(i, x, psi2);
      const double g1 = gs(i, {}, psi);
      const double g2 = gs2(i, {}, psi2);

      const double lip_num = (f1 - f2) * (f1 - f2) + (g1 - g2) * (g1 - g2);
      if (sup_diff > 0.0) {
        report.K_hat = std::max(report.K_hat, lip_num / (sup_diff * sup_diff));
      } else if (lip_num > 0.0) {
        report.K_hat = std::numeric_limits<double>::infinity();
      }
      report.L_hat = std::max(report.L_hat, (f1 * f1 + g1 * g1) / (1.0 + sup_x * sup_x + sup_psi * sup_psi));
      energy += f1 * f1 * grid.dt();
    }
    report.M_hat = std::max(report.M_hat, energy);
  }

  const auto exceeds = [&](double hat, double declared) { return hat > declared * (1.0 + options.tolerance); };
  report.K_violated = exceeds(report.K_hat, report.declared.K);
  report.L_violated = exceeds(report.L_hat, report.declared.L);
  report.M_violated = report.declared.M && exceeds(report.M_hat, *report.declared.M);
  return report;
}

}  // namespace picard
