#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>

#include "picard/errors.hpp"

namespace picard {

struct BoundInputs {
  double K = 1.0;
  double L = 1.0;
  double T = 1.0;
  /// E sup_{t<=T} |xi(t)|^2; zero is allowed for channels without a message.
  double xi_moment = 1.0;
  std::optional<double> M;
  double p = 2.0;
  /// Front constant of the mutual-information rate, which is only known up to a factor.
  double mi_multiplier = 1.0;
};

/// Explicit constants and bound curves of the Picard iteration.
class BoundSet {
 public:
  explicit BoundSet(const BoundInputs& in) : in_(in) {
    const double base = 2.0 * in.L * (in.T + 4.0);
    k2_ = base;
    k1_ = base * in.T * (1.0 + in.xi_moment);
    c1_ = 2.0 * in.T * in.L * (in.T + 4.0) * (1.0 + in.xi_moment);
    c2_ = 2.0 * in.K * (in.T + 4.0);
    c3_ = k1_ * std::exp(k2_ * in.T);
  }

  [[nodiscard]] const BoundInputs& inputs() const noexcept { return in_; }
  [[nodiscard]] double k1() const noexcept { return k1_; }
  [[nodiscard]] double k2() const noexcept { return k2_; }
  [[nodiscard]] double c1() const noexcept { return c1_; }
  [[nodiscard]] double c2() const noexcept { return c2_; }
  [[nodiscard]] double c3() const noexcept { return c3_; }

  /// (c2 T)^n / n!, evaluated in log space.
  [[nodiscard]] double factorial_term(std::size_t n) const {
    const double x = c2_ * in_.T;
    const double nd = static_cast<double>(n);
    return std::exp(nd * std::log(x) - std::lgamma(nd + 1.0));
  }

  /// E ||Y^(n+1) - Y^(n)||_T^2 <= c1 (c2 T)^n / n!.
  [[nodiscard]] double picard_l2(std::size_t n) const { return c1_ * factorial_term(n); }

  /// E ||Y^(n) - Y||_T^2 <= c3 (c2 T)^n / n!.
  [[nodiscard]] double limit_l2(std::size_t n) const { return c3_ * factorial_term(n); }

  /// Bound on D(mu_{Y^(n)} || mu_Y), n >= 1.
  [[nodiscard]] double kl_rate(std::size_t n) const {
    require_order(n);
    const double a = c1_ * in_.K * in_.T;
    const double s = factorial_term(n - 1);
    return std::sqrt(a) * std::sqrt(s) + 0.5 * a * s;
  }

  /// Bound on E|log joint density of Y^(n) - log joint density of Y|, n >= 1.
  [[nodiscard]] double joint_l1(std::size_t n) const {
    require_order(n);
    const double a = c1_ * in_.K * in_.T;
    const double s_prev = factorial_term(n - 1);
    const double s = factorial_term(n);
    return 4.0 * std::sqrt(a) * (std::sqrt(s) + std::sqrt(s_prev)) + 2.0 * a * s;
  }

  /// Shape of the mutual-information gap |I(xi; Y^(n)) - I(xi; Y)|, scaled by the
  /// multiplier. Uses c2 in both factorial terms.
  [[nodiscard]] double mi_rate(std::size_t n) const { return mi_rate(n, in_.p); }
  [[nodiscard]] double mi_rate(std::size_t n, double p) const {
    require_order(n);
    if (!(p >= 1.0)) throw DomainError("mi_rate: p must be >= 1");
    const double s_prev = factorial_term(n - 1);
    const double s = factorial_term(n);
    return in_.mi_multiplier * (std::pow(s_prev + s, 1.0 / (2.0 * p)) + std::sqrt(s_prev) + s_prev);
  }

  /// 2T(M + 4), the replacement for c1 under (B).
  [[nodiscard]] std::optional<double> c1_tilde() const {
    if (!in_.M) return std::nullopt;
    return 2.0 * in_.T * (*in_.M + 4.0);
  }

  /// e^{p(p+1)M/2}, the cap on p-th moments of the densities under (B).
  [[nodiscard]] std::optional<double> moment_cap() const { return moment_cap(in_.p); }
  [[nodiscard]] std::optional<double> moment_cap(double p) const {
    if (!in_.M) return std::nullopt;
    return std::exp(p * (p + 1.0) * *in_.M / 2.0);
  }

  /// Smallest n >= 1 past the peak of kl_rate with kl_rate(n) < threshold.
  [[nodiscard]] std::size_t first_n_kl_below(double threshold) const {
    if (!(threshold > 0.0)) throw DomainError("first_n_kl_below: threshold must be positive");
    // kl_rate is increasing while c2 T > n - 1 and decreasing afterwards.
    for (std::size_t n = 1;; ++n) {
      if (static_cast<double>(n - 1) >= c2_ * in_.T && kl_rate(n) < threshold) return n;
      if (n == std::numeric_limits<std::size_t>::max()) throw NumericError("kl_rate never drops below threshold");
    }
  }

 private:
  static void require_order(std::size_t n) {
    if (n == 0) throw DomainError("rate curves are defined for n >= 1");
  }

  BoundInputs in_;
  double k1_ = 0.0, k2_ = 0.0, c1_ = 0.0, c2_ = 0.0, c3_ = 0.0;
};

[[nodiscard]] inline BoundSet compute_bounds(const BoundInputs& in) {
  const auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError(std::string(name) + " must be positive and finite");
  };
  positive(in.K, "K");
  positive(in.L, "L");
  positive(in.T, "T");
  if (!(in.xi_moment >= 0.0) || !std::isfinite(in.xi_moment)) {
    throw DomainError("xi_moment must be nonnegative and finite");
  }
  if (in.M) positive(*in.M, "M");
  if (!(in.p >= 1.0) || !std::isfinite(in.p)) throw DomainError("p must be >= 1");
  positive(in.mi_multiplier, "mi_multiplier");
  return BoundSet(in);
}

[[nodiscard]] inline BoundSet compute_bounds(double K, double L, double T, double xi_moment,
                                             std::optional<double> M = std::nullopt, double p = 2.0) {
  return compute_bounds(BoundInputs{K, L, T, xi_moment, M, p, 1.0});
}

}  // namespace picard
