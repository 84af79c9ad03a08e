#pragma once

#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <utility>

#include "picard/errors.hpp"
#include "picard/functional.hpp"

namespace picard {

namespace detail {

class ReducedKernel final : public DriftKernel {
 public:
  ReducedKernel(DriftFunctional f, DiffusionFunctional g, double regularity_bound)
      : f_(std::move(f)), g_(std::move(g)), floor_(1.0 / regularity_bound) {}

  [[nodiscard]] std::unique_ptr<DriftCursor> open(const TimeGrid& grid) const override {
    return std::make_unique<Cursor>(*this, grid);
  }

 private:
  class Cursor final : public DriftCursor {
   public:
    Cursor(const ReducedKernel& k, const TimeGrid& grid)
        : f_(k.f_.sweep(grid)), g_(k.g_.sweep(grid)), floor_(k.floor_), label_(k.g_.label()) {}
    void reset() override {}
    double next(std::size_t i, std::span<const double> x, std::span<const double> y) override {
      const double fv = f_(i, x, y);
      const double gv = g_(i, {}, y);
      if (std::abs(gv) < floor_) {
        throw RegularityError("diffusion '" + label_ + "' has |g| = " + std::to_string(std::abs(gv)) +
                                  " below the declared floor " + std::to_string(floor_) + " at knot " +
                                  std::to_string(i),
                              i);
      }
      return fv / gv;
    }

   private:
    DriftSweep f_;
    DriftSweep g_;
    double floor_;
    std::string label_;
  };

  DriftFunctional f_;
  DiffusionFunctional g_;
  double floor_;
};

class TruncatedKernel final : public DriftKernel {
 public:
  TruncatedKernel(DriftFunctional f, double level) : f_(std::move(f)), level_(level) {}

  [[nodiscard]] std::unique_ptr<DriftCursor> open(const TimeGrid& grid) const override {
    return std::make_unique<Cursor>(f_.sweep(grid), level_, grid.dt());
  }

 private:
  class Cursor final : public DriftCursor {
   public:
    Cursor(DriftSweep f, double level, double dt) : f_(std::move(f)), level_(level), dt_(dt) {}
    void reset() override {
      energy_ = 0.0;
      stopped_ = false;
    }
    double next(std::size_t i, std::span<const double> x, std::span<const double> y) override {
      const double v = f_(i, x, y);
      // Switch off for good before the grid energy sum f^2 dt would pass the level.
      if (stopped_ || energy_ + v * v * dt_ > level_) {
        stopped_ = true;
        return 0.0;
      }
      energy_ += v * v * dt_;
      return v;
    }

   private:
    DriftSweep f_;
    double level_;
    double dt_;
    double energy_ = 0.0;
    bool stopped_ = false;
  };

  DriftFunctional f_;
  double level_;
};

}  // namespace detail

/// f~ = f / g, the drift of the unit-diffusion equation with the same densities.
///
/// Declared constants: L~ = R^2 L + 1 and M~ = R^2 M hold in general; K~ = R^2 K
/// is exact only for state-independent g.
[[nodiscard]] inline DriftFunctional reduce_diffusion(const DriftFunctional& f, const DiffusionFunctional& g) {
  if (g.is_unit()) {
    return f;
  }
  const auto bound = g.regularity_bound();
  if (!bound) {
    throw DomainError("reduce_diffusion: diffusion '" + g.label() + "' does not declare condition (R)");
  }
  const double r2 = *bound * *bound;
  const Constants& c = f.constants();
  Constants reduced{r2 * c.K, r2 * c.L + 1.0, std::nullopt};
  if (c.M) reduced.M = r2 * *c.M;
  return {std::make_shared<detail::ReducedKernel>(f, g, *bound), reduced, "(" + f.label() + ")/(" + g.label() + ")"};
}

/// f_(m)(t) = f(t) 1{ int_0^t f^2 ds <= m }, switched off at the first knot whose
/// contribution f^2 dt would push the grid energy past m. The grid energy of the
/// output is therefore at most m, so (B) holds with M = m. (L) is inherited
/// nominally: the indicator is discontinuous.
[[nodiscard]] inline DriftFunctional truncate_drift(const DriftFunctional& f, double level) {
  if (!(level > 0.0) || !std::isfinite(level)) {
    throw DomainError("truncate_drift: level m must be positive");
  }
  Constants c = f.constants();
  c.M = level;
  return {std::make_shared<detail::TruncatedKernel>(f, level), c,
          f.label() + " truncated at " + std::to_string(level)};
}

}  // namespace picard
