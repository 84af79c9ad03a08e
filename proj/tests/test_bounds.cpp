#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "picard/bounds.hpp"
#include "picard/errors.hpp"
#include "picard/rng.hpp"

using namespace picard;

TEST(Bounds, UnitInputsGiveTextbookConstants) {
  const BoundSet b = compute_bounds(1.0, 1.0, 1.0, 1.0);
  EXPECT_EQ(b.k1(), 20.0);
  EXPECT_EQ(b.k2(), 10.0);
  EXPECT_EQ(b.c1(), 20.0);
  EXPECT_EQ(b.c2(), 10.0);
  EXPECT_DOUBLE_EQ(b.c3(), 20.0 * std::exp(10.0));
  EXPECT_FALSE(b.c1_tilde().has_value());
  EXPECT_FALSE(b.moment_cap().has_value());
}

TEST(Bounds, EnergyBoundConstants) {
  const BoundSet b = compute_bounds(1.0, 1.0, 1.0, 1.0, 1.0, 2.0);
  EXPECT_EQ(*b.c1_tilde(), 10.0);
  EXPECT_DOUBLE_EQ(*b.moment_cap(), std::exp(3.0));
  EXPECT_NEAR(*b.moment_cap(), 20.09, 0.01);
  EXPECT_DOUBLE_EQ(*b.moment_cap(-1.0), 1.0);
}

TEST(Bounds, KlRateAtFirstOrder) {
  const BoundSet b = compute_bounds(1.0, 1.0, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(b.kl_rate(1), std::sqrt(20.0) + 10.0);
  EXPECT_NEAR(b.kl_rate(1), 14.47, 0.005);
  EXPECT_THROW((void)b.kl_rate(0), DomainError);
}

TEST(Bounds, CurvesBySubstitution) {
  const BoundSet b = compute_bounds(2.0, 8.0, 1.0, 1.0);
  // c1 = 2*1*8*5*2 = 160, c2 = 2*2*5 = 20.
  EXPECT_EQ(b.c1(), 160.0);
  EXPECT_EQ(b.c2(), 20.0);
  const double a = 160.0 * 2.0;
  const double s2 = 400.0 / 2.0, s3 = 8000.0 / 6.0;
  EXPECT_NEAR(b.kl_rate(3), std::sqrt(a) * std::sqrt(s2) + a * s2 / 2.0, 1e-9 * b.kl_rate(3));
  EXPECT_NEAR(b.joint_l1(3), 4.0 * std::sqrt(a) * (std::sqrt(s3) + std::sqrt(s2)) + 2.0 * a * s3,
              1e-9 * b.joint_l1(3));
  EXPECT_NEAR(b.mi_rate(3), std::pow(s2 + s3, 0.25) + std::sqrt(s2) + s2, 1e-9 * b.mi_rate(3));
  EXPECT_NEAR(b.mi_rate(3, 1.0), std::pow(s2 + s3, 0.5) + std::sqrt(s2) + s2, 1e-9 * b.mi_rate(3));
  EXPECT_NEAR(b.picard_l2(2), 160.0 * s2, 1e-9);
  EXPECT_NEAR(b.limit_l2(2), b.c3() * s2, 1e-9 * b.limit_l2(2));
}

TEST(Bounds, MultiplierScalesMutualInformationRate) {
  BoundInputs in{1.0, 1.0, 1.0, 1.0, 1.0, 2.0, 3.0};
  const BoundSet scaled = compute_bounds(in);
  in.mi_multiplier = 1.0;
  EXPECT_DOUBLE_EQ(scaled.mi_rate(4), 3.0 * compute_bounds(in).mi_rate(4));
}

TEST(Bounds, FactorialRatioIsExact) {
  const BoundSet b = compute_bounds(1.5, 2.0, 0.7, 0.3);
  const double x = b.c2() * 0.7;
  for (std::size_t n = 0; n < 300; ++n) {
    const double r = b.picard_l2(n + 1) / b.picard_l2(n);
    if (b.picard_l2(n + 1) < std::numeric_limits<double>::min()) break;  // subnormal far out
    EXPECT_NEAR(r, x / static_cast<double>(n + 1), 1e-11 * r) << "n=" << n;
  }
  EXPECT_TRUE(std::isfinite(b.picard_l2(400)));
}

TEST(Bounds, KlRateEventuallyDecreasesBelowAnyThreshold) {
  RngStream s(1, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const double K = 0.1 + 5.0 * s.uniform(), L = 0.1 + 5.0 * s.uniform(), T = 0.1 + 3.0 * s.uniform();
    const BoundSet b = compute_bounds(K, L, T, 3.0 * s.uniform());
    const std::size_t n = b.first_n_kl_below(1e-2);
    EXPECT_LT(b.kl_rate(n), 1e-2);
    for (std::size_t k = n; k < n + 20; ++k) EXPECT_LT(b.kl_rate(k + 1), b.kl_rate(k));
    if (n > 1) {
      EXPECT_GE(b.kl_rate(n - 1), 1e-2);
    }
  }
}

TEST(Bounds, FirstOrderBelowThresholdForLinearFeedback) {
  const BoundSet b = compute_bounds(2.0, 8.0, 1.0, 1.0);
  const std::size_t n = b.first_n_kl_below(1e-2);
  EXPECT_LT(b.kl_rate(n), 1e-2);
  EXPECT_GE(b.kl_rate(n - 1), 1e-2);
}

TEST(Bounds, MonotoneInEveryInput) {
  const BoundInputs base{1.0, 1.0, 1.0, 1.0, std::nullopt, 2.0, 1.0};
  const BoundSet b0 = compute_bounds(base);
  for (int which = 0; which < 4; ++which) {
    BoundInputs up = base;
    double* field = which == 0 ? &up.K : which == 1 ? &up.L : which == 2 ? &up.T : &up.xi_moment;
    *field *= 1.5;
    const BoundSet b1 = compute_bounds(up);
    EXPECT_GE(b1.c1(), b0.c1());
    EXPECT_GE(b1.c3(), b0.c3());
    for (std::size_t n = 1; n < 30; ++n) {
      EXPECT_GE(b1.picard_l2(n), b0.picard_l2(n)) << which;
      EXPECT_GE(b1.limit_l2(n), b0.limit_l2(n)) << which;
      EXPECT_GE(b1.kl_rate(n), b0.kl_rate(n)) << which;
      EXPECT_GE(b1.joint_l1(n), b0.joint_l1(n)) << which;
      EXPECT_GE(b1.mi_rate(n), b0.mi_rate(n)) << which;
    }
  }
}

TEST(Bounds, RejectInvalidInputs) {
  EXPECT_THROW((void)compute_bounds(0.0, 1.0, 1.0, 1.0), DomainError);
  EXPECT_THROW((void)compute_bounds(1.0, -1.0, 1.0, 1.0), DomainError);
  EXPECT_THROW((void)compute_bounds(1.0, 1.0, 0.0, 1.0), DomainError);
  EXPECT_THROW((void)compute_bounds(1.0, 1.0, 1.0, -1.0), DomainError);
  EXPECT_THROW((void)compute_bounds(1.0, 1.0, 1.0, 1.0, 0.0), DomainError);
  EXPECT_THROW((void)compute_bounds(1.0, 1.0, 1.0, 1.0, 1.0, 0.5), DomainError);
  EXPECT_NO_THROW((void)compute_bounds(1.0, 1.0, 1.0, 0.0));
}
