#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "picard/errors.hpp"
#include "picard/functional.hpp"
#include "picard/message.hpp"
#include "picard/transforms.hpp"

namespace picard {

using PresetParams = std::map<std::string, double>;

/// A named channel: drift, diffusion and message law.
struct Channel {
  std::string name;
  DriftFunctional drift;
  DiffusionFunctional diffusion;
  MessageLaw law;
};

namespace detail {

inline double param(const PresetParams& p, const std::string& key, double fallback) {
  const auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

inline void check_keys(const std::string& preset, const PresetParams& p, std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : p) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw ConfigError("preset '" + preset + "' has no parameter '" + key + "'", "preset.params." + key);
    }
    if (!std::isfinite(value)) {
      throw ConfigError("preset parameter '" + key + "' must be finite", "preset.params." + key);
    }
  }
}

inline DriftFunctional linear_feedback_drift(double a) {
  // K = max(1, 8a^2) and L = max(8, 8a^2) dominate a^2 and max(2, 2a^2) + 1.
  const Constants c{std::max(1.0, 8.0 * a * a), std::max(8.0, 8.0 * a * a), std::nullopt};
  return DriftFunctional::pointwise(
      "linear-feedback(a=" + std::to_string(a) + ")", [a](double, double x, double y) { return a * y + x; }, c);
}

}  // namespace detail

[[nodiscard]] inline std::vector<std::string> preset_names() {
  return {"zero", "constant-drift", "message-only", "linear-feedback", "bounded-truncated", "ou-drift"};
}

/// Builds a built-in channel. Parameters and defaults:
///   zero
///   constant-drift     theta = 1                 f = theta, no message
///   message-only       sigma = 1                 f = x(t), xi == xi_0 ~ N(0, sigma^2)
///   linear-feedback    a = 0.5, sigma = 1        f = a y(t) + x(t)
///   bounded-truncated  m = 1, a = 0.5, sigma = 1 linear feedback truncated at energy m
///   ou-drift           theta = 1, sigma = 1      f = x(t) - theta y(t)
/// All channels have unit diffusion. `horizon` is needed for horizon-dependent constants.
[[nodiscard]] inline Channel make_preset(const std::string& name, const PresetParams& params, double horizon) {
  using detail::param;
  const DiffusionFunctional unit = DiffusionFunctional::unit();

  if (name == "zero") {
    detail::check_keys(name, params, {});
    return {name, DriftFunctional::pointwise("zero", [](double, double, double) { return 0.0; }, {1.0, 1.0, {}}),
            unit, MessageLaw::none()};
  }
  if (name == "constant-drift") {
    detail::check_keys(name, params, {"theta"});
    const double theta = param(params, "theta", 1.0);
    const double energy = theta * theta * horizon;
    Constants c{1.0, theta * theta + 1.0, energy > 0.0 ? std::optional<double>(energy) : std::nullopt};
    return {name,
            DriftFunctional::pointwise("constant(" + std::to_string(theta) + ")",
                                       [theta](double, double, double) { return theta; }, c),
            unit, MessageLaw::none()};
  }
  if (name == "message-only") {
    detail::check_keys(name, params, {"sigma"});
    const double sigma = param(params, "sigma", 1.0);
    return {name, DriftFunctional::pointwise("x(t)", [](double, double x, double) { return x; }, {1.0, 1.0, {}}),
            unit, MessageLaw::constant_gaussian(sigma)};
  }
  if (name == "linear-feedback") {
    detail::check_keys(name, params, {"a", "sigma"});
    return {name, detail::linear_feedback_drift(param(params, "a", 0.5)), unit,
            MessageLaw::constant_gaussian(param(params, "sigma", 1.0))};
  }
  if (name == "bounded-truncated") {
    detail::check_keys(name, params, {"m", "a", "sigma"});
    return {name, truncate_drift(detail::linear_feedback_drift(param(params, "a", 0.5)), param(params, "m", 1.0)),
            unit, MessageLaw::constant_gaussian(param(params, "sigma", 1.0))};
  }
  if (name == "ou-drift") {
    detail::check_keys(name, params, {"theta", "sigma"});
    const double theta = param(params, "theta", 1.0);
    const double t2 = theta * theta;
    const Constants c{std::max(1.0, t2), 2.0 * std::max(1.0, t2), std::nullopt};
    return {name,
            DriftFunctional::pointwise("ou(theta=" + std::to_string(theta) + ")",
                                       [theta](double, double x, double y) { return x - theta * y; }, c),
            unit, MessageLaw::constant_gaussian(param(params, "sigma", 1.0))};
  }
  throw ConfigError("unknown preset '" + name + "'", "preset.name");
}

}  // namespace picard
