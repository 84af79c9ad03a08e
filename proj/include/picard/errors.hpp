#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace picard {

/// Invalid argument or constant (nonpositive horizon, K <= 0, p < 1, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Mismatched lengths between a path and the grid or an integrand.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A non-finite value appeared during evaluation, optionally at a known knot.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what, std::optional<std::size_t> knot = std::nullopt)
      : std::runtime_error(what), knot_(knot) {}

  [[nodiscard]] std::optional<std::size_t> knot() const noexcept { return knot_; }

 private:
  std::optional<std::size_t> knot_;
};

/// |g| fell below the reciprocal of the declared regularity bound.
class RegularityError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Malformed or incomplete experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what, std::string field = {})
      : std::runtime_error(what), field_(std::move(field)) {}

  [[nodiscard]] const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace picard
