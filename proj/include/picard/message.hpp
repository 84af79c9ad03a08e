#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>

#include "picard/errors.hpp"
#include "picard/grid.hpp"
#include "picard/path_ops.hpp"
#include "picard/rng.hpp"

namespace picard {

/// Law of the message process xi, independent of the driving noise.
class MessageLaw {
 public:
  using Sampler = std::function<void(const TimeGrid&, RngStream&, std::span<double>)>;
  using Moment = std::function<double(double horizon)>;

  MessageLaw(std::string label, Sampler sampler, Moment second_moment)
      : label_(std::make_shared<const std::string>(std::move(label))),
        sampler_(std::make_shared<const Sampler>(std::move(sampler))),
        second_moment_(std::make_shared<const Moment>(std::move(second_moment))) {}

  /// xi == 0 (no message).
  [[nodiscard]] static MessageLaw none() {
    return {"none", [](const TimeGrid&, RngStream&, std::span<double> out) { std::ranges::fill(out, 0.0); },
            [](double) { return 0.0; }};
  }

  /// xi(t) == value for all t.
  [[nodiscard]] static MessageLaw constant(double value) {
    return {"constant(" + std::to_string(value) + ")",
            [value](const TimeGrid&, RngStream&, std::span<double> out) { std::ranges::fill(out, value); },
            [value](double) { return value * value; }};
  }

  /// xi(t) == xi_0 with xi_0 ~ N(0, sigma^2).
  [[nodiscard]] static MessageLaw constant_gaussian(double sigma) {
    require_nonnegative(sigma, "sigma");
    return {"constant_gaussian(" + std::to_string(sigma) + ")",
            [sigma](const TimeGrid&, RngStream& rng, std::span<double> out) {
              std::ranges::fill(out, sigma * rng.normal());
            },
            [sigma](double) { return sigma * sigma; }};
  }

  /// xi = sigma * B for a Brownian motion B independent of W.
  /// E sup_{t<=T} |B(t)|^2 = 2 G T, G Catalan's constant.
  [[nodiscard]] static MessageLaw brownian(double sigma) {
    require_nonnegative(sigma, "sigma");
    constexpr double kCatalan = 0.915965594177219015054603514932384110774;
    return {"brownian(" + std::to_string(sigma) + ")",
            [sigma](const TimeGrid& grid, RngStream& rng, std::span<double> out) {
              sample_brownian_into(grid, rng, out);
              for (double& v : out) v *= sigma;
            },
            [sigma](double horizon) { return 2.0 * kCatalan * sigma * sigma * horizon; }};
  }

  void sample_into(const TimeGrid& grid, RngStream& rng, std::span<double> out) const {
    if (out.size() != grid.knots()) throw DimensionError("message buffer does not match grid");
    (*sampler_)(grid, rng, out);
  }

  [[nodiscard]] Path sample(const TimeGrid& grid, RngStream& rng) const {
    Path x(grid);
    sample_into(grid, rng, x.values());
    return x;
  }

  /// Declared E sup_{t<=T} |xi(t)|^2.
  [[nodiscard]] double second_moment(double horizon) const { return (*second_moment_)(horizon); }
  [[nodiscard]] const std::string& label() const noexcept { return *label_; }

 private:
  static void require_nonnegative(double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError(std::string("message parameter ") + name + " must be >= 0");
  }

  std::shared_ptr<const std::string> label_;
  std::shared_ptr<const Sampler> sampler_;
  std::shared_ptr<const Moment> second_moment_;
};

}  // namespace picard
