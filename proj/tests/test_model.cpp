#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "picard/accumulator.hpp"
#include "picard/conditions.hpp"
#include "picard/errors.hpp"
#include "picard/expression.hpp"
#include "picard/functional.hpp"
#include "picard/message.hpp"
#include "picard/path_ops.hpp"
#include "picard/presets.hpp"
#include "picard/rng.hpp"
#include "picard/transforms.hpp"

using namespace picard;

namespace {

DriftFunctional zero_drift() {
  return DriftFunctional::pointwise("0", [](double, double, double) { return 0.0; }, {});
}
DriftFunctional constant_drift(double c, Constants k = {}) {
  return DriftFunctional::pointwise("c", [c](double, double, double) { return c; }, k);
}

std::vector<DriftFunctional> registered_drifts(double horizon) {
  std::vector<DriftFunctional> out;
  for (const auto& name : preset_names()) out.push_back(make_preset(name, {}, horizon).drift);
  out.push_back(expression_drift("sin(t) * supy - 0.3 * y(t) + x", {2.0, 3.0, {}}));
  out.push_back(truncate_drift(expression_drift("supy + 1", {1.0, 2.0, {}}), 0.3));
  out.push_back(DriftFunctional::causal(
      "running mean",
      [](const TimeGrid&, std::size_t i, std::span<const double> x, std::span<const double> y) {
        double s = 0.0;
        for (std::size_t j = 0; j <= i; ++j) s += y[j] + x[j];
        return s / static_cast<double>(i + 1);
      },
      {1.0, 1.0, {}}));
  return out;
}

}  // namespace

TEST(Constants, RejectNonpositive) {
  EXPECT_THROW(constant_drift(1.0, {0.0, 1.0, {}}), DomainError);
  EXPECT_THROW(constant_drift(1.0, {1.0, -1.0, {}}), DomainError);
  EXPECT_THROW(constant_drift(1.0, {1.0, 1.0, 0.0}), DomainError);
  EXPECT_THROW(constant_drift(1.0, {INFINITY, 1.0, {}}), DomainError);
}

TEST(DriftFunctional, CausalUnderTailPerturbation) {
  const TimeGrid g(1.0, 40);
  RngStream s(17, 0);
  for (const auto& f : registered_drifts(1.0)) {
    for (int trial = 0; trial < 30; ++trial) {
      std::vector<double> x(41), y(41);
      for (auto& v : x) v = s.normal();
      for (auto& v : y) v = s.normal();
      const std::size_t i = static_cast<std::size_t>(s.uniform() * 40);
      std::vector<double> x2 = x, y2 = y;
      for (std::size_t j = i + 1; j <= 40; ++j) {
        x2[j] += 5.0 * s.normal();
        y2[j] += 5.0 * s.normal();
      }
      EXPECT_EQ(f.evaluate_at(g, i, x, y), f.evaluate_at(g, i, x2, y2)) << f.label() << " at knot " << i;
    }
  }
}

TEST(DriftSweep, RequiresConsecutiveKnots) {
  const TimeGrid g(1.0, 4);
  auto s = constant_drift(1.0).sweep(g);
  const std::vector<double> y(5, 0.0);
  (void)s(0, {}, y);
  EXPECT_THROW((void)s(2, {}, y), std::logic_error);
  EXPECT_NO_THROW((void)s(0, {}, y));  // knot 0 restarts
}

TEST(DriftSweep, NonFiniteValueNamesKnot) {
  const TimeGrid g(1.0, 4);
  const auto f = expression_drift("1 / (t - 0.5)", {1.0, 1.0, {}});
  const std::vector<double> y(5, 0.0);
  try {
    (void)f.evaluate_at(g, 3, {}, y);
    FAIL();
  } catch (const NumericError& e) {
    ASSERT_TRUE(e.knot().has_value());
    EXPECT_EQ(*e.knot(), 2u);
    EXPECT_NE(std::string(e.what()).find("knot 2"), std::string::npos);
  }
}

TEST(ReduceDiffusion, UnitDiffusionIsIdentity) {
  const TimeGrid g(1.0, 16);
  const auto f = make_preset("ou-drift", {}, 1.0).drift;
  const auto r = reduce_diffusion(f, DiffusionFunctional::unit());
  RngStream s(1, 1);
  const Path x = sample_brownian(g, s), y = sample_brownian(g, s);
  EXPECT_EQ(f.evaluate_path(x, y), r.evaluate_path(x, y));
}

TEST(ReduceDiffusion, ConstantRatio) {
  const TimeGrid g(1.0, 8);
  const auto r = reduce_diffusion(constant_drift(2.0),
                                  DiffusionFunctional::pointwise("2", [](double, double) { return 2.0; }, 0.5));
  for (double v : r.evaluate_path(Path(g), Path(g))) EXPECT_EQ(v, 1.0);
}

TEST(ReduceDiffusion, MatchesDirectQuotient) {
  const TimeGrid g(1.0, 32);
  const auto f = DriftFunctional::pointwise("x", [](double, double x, double) { return x; }, {});
  const auto gfun = [](double, double y) { return 1.0 + 0.5 * std::sin(y); };
  const auto g_diff = DiffusionFunctional::pointwise("1+sin(y)/2", gfun, 2.0);
  const auto r = reduce_diffusion(f, g_diff);
  RngStream s(5, 5);
  const Path x = sample_brownian(g, s), y = sample_brownian(g, s);
  const auto vals = r.evaluate_path(x, y);
  for (std::size_t i : {3u, 17u, 31u}) {
    EXPECT_DOUBLE_EQ(vals[i], x[i] / gfun(0.0, y[i]));
    // Multiplying back recovers f.
    EXPECT_NEAR(vals[i] * gfun(0.0, y[i]), x[i], 4e-16 * std::max(1.0, std::abs(x[i])));
  }
}

TEST(ReduceDiffusion, RegularityViolation) {
  const auto g = DiffusionFunctional::pointwise("y", [](double, double y) { return y; }, 2.0);
  EXPECT_THROW((void)reduce_diffusion(constant_drift(1.0), DiffusionFunctional::pointwise(
                                                               "1", [](double, double) { return 1.0; })),
               DomainError);
  const auto r = reduce_diffusion(constant_drift(1.0), g);
  const TimeGrid grid(1.0, 4);
  std::vector<double> y = {0.0, 1.0, 1.0, 1.0, 1.0};
  EXPECT_THROW((void)r.evaluate_at(grid, 0, {}, y), RegularityError);  // |g| = 0 < 1/2
  y[0] = 0.6;
  EXPECT_NO_THROW((void)r.evaluate_at(grid, 0, {}, y));
}

TEST(TruncateDrift, ZeroDriftStaysZero) {
  const TimeGrid g(1.0, 10);
  for (double v : truncate_drift(zero_drift(), 0.1).evaluate_path(Path(g), Path(g))) EXPECT_EQ(v, 0.0);
}

TEST(TruncateDrift, UnitDriftCutsAtLevel) {
  const TimeGrid g(1.0, 100);
  const auto vals = truncate_drift(constant_drift(1.0), 0.5).evaluate_path(Path(g), Path(g));
  std::vector<double> sq(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) sq[i] = vals[i] * vals[i];
  // The running energy never exceeds the level and stops within one step of it.
  EXPECT_LE(quadrature(sq, g), 0.5);
  EXPECT_GE(quadrature(sq, g), 0.5 - g.dt() - 1e-12);
  EXPECT_EQ(vals.front(), 1.0);
  EXPECT_EQ(vals.back(), 0.0);
  // Once off, stays off.
  bool off = false;
  for (double v : vals) {
    if (v == 0.0) off = true;
    if (off) {
      EXPECT_EQ(v, 0.0);
    }
  }
}

TEST(TruncateDrift, InactiveWhenLevelCoversEnergy) {
  const TimeGrid g(1.0, 64);
  for (double v : truncate_drift(constant_drift(1.0), 1.0).evaluate_path(Path(g), Path(g))) EXPECT_EQ(v, 1.0);
}

TEST(TruncateDrift, RunningEnergyNeverExceedsLevel) {
  const TimeGrid g(1.0, 128);
  const auto f = truncate_drift(expression_drift("3 * y + x", {9.0, 10.0, {}}), 0.7);
  RngStream s(6, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const Path x = sample_brownian(g, s), y = sample_brownian(g, s);
    double energy = 0.0;
    for (double v : f.evaluate_path(x, y)) energy += v * v * g.dt();
    EXPECT_LE(energy, 0.7);
  }
  EXPECT_EQ(*f.constants().M, 0.7);
  EXPECT_THROW((void)truncate_drift(f, 0.0), DomainError);
}

TEST(ProbeConditions, ZeroDriftHasNoViolation) {
  const TimeGrid g(1.0, 32);
  RngStream s(1, 0);
  const auto r = probe_conditions(zero_drift(), DiffusionFunctional::unit(), MessageLaw::none(), g, 200, s);
  EXPECT_EQ(r.K_hat, 0.0);
  EXPECT_LE(r.L_hat, 1.0);
  EXPECT_FALSE(r.any_violation());
}

TEST(ProbeConditions, IdentityDriftIsOneLipschitz) {
  const TimeGrid g(1.0, 32);
  RngStream s(2, 0);
  const auto f = DriftFunctional::pointwise("y", [](double, double, double y) { return y; }, {1.0, 2.0, {}});
  const auto r = probe_conditions(f, DiffusionFunctional::unit(), MessageLaw::none(), g, 500, s);
  EXPECT_LE(r.K_hat, 1.0);
  EXPECT_FALSE(r.K_violated);
}

TEST(ProbeConditions, QuadraticDriftViolatesUnitLipschitz) {
  const TimeGrid g(1.0, 32);
  RngStream s(3, 0);
  const auto f = DriftFunctional::pointwise("y^2", [](double, double, double y) { return y * y; }, {1.0, 1.0, {}});
  const auto r = probe_conditions(f, DiffusionFunctional::unit(), MessageLaw::none(), g, 200, s, {10.0, 1e-9});
  EXPECT_TRUE(r.K_violated);
  EXPECT_GT(r.K_hat, 1.0);
  // Direct pair psi = 10, psi~ = 9: (100 - 81)^2 / 1 = 361.
  EXPECT_EQ((100.0 - 81.0) * (100.0 - 81.0), 361.0);
}

TEST(ProbeConditions, EnergyCutBreaksLipschitz) {
  const TimeGrid g(1.0, 64);
  const Channel ch = make_preset("bounded-truncated", {}, 1.0);
  RngStream s(4, 0);
  const auto r = probe_conditions(ch.drift, ch.diffusion, ch.law, g, 300, s, {3.0, 1e-9});
  EXPECT_TRUE(r.K_violated) << "K_hat=" << r.K_hat;
}

TEST(ProbeConditions, PresetsRespectDeclaredConstants) {
  const TimeGrid g(1.0, 64);
  for (const auto& name : preset_names()) {
    const Channel ch = make_preset(name, {}, 1.0);
    RngStream s(4, 0);
    const auto r = probe_conditions(ch.drift, ch.diffusion, ch.law, g, 300, s, {3.0, 1e-9});
    // The energy cut is a jump in the path, so no finite Lipschitz constant holds for it.
    if (name != "bounded-truncated") {
      EXPECT_FALSE(r.K_violated) << name << " K_hat=" << r.K_hat;
    }
    EXPECT_FALSE(r.L_violated) << name << " L_hat=" << r.L_hat;
    EXPECT_FALSE(r.M_violated) << name << " M_hat=" << r.M_hat;
  }
}

TEST(ProbeConditions, NeedsATrial) {
  RngStream s(1, 1);
  EXPECT_THROW((void)probe_conditions(zero_drift(), DiffusionFunctional::unit(), MessageLaw::none(),
                                      TimeGrid(1.0, 4), 0, s),
               DomainError);
}

TEST(MessageLaw, GaussianConstantSecondMoment) {
  const TimeGrid g(1.0, 8);
  const auto law = MessageLaw::constant_gaussian(1.5);
  RngStream s(7, 0);
  Accumulator acc;
  for (int k = 0; k < 50000; ++k) {
    const Path x = law.sample(g, s);
    EXPECT_EQ(x[0], x[8]);
    const double m = sup_norm(x);
    acc.add(m * m);
  }
  EXPECT_LT(std::abs(acc.mean() - law.second_moment(1.0)), 3.0 * acc.std_error());
}

// E sup_{t<=T} |B(t)|^2 = 2 G T (G = Catalan's constant); the grid sup approaches it from below.
TEST(MessageLaw, BrownianSecondMomentConvergesUnderRefinement) {
  const auto law = MessageLaw::brownian(1.0);
  const double declared = law.second_moment(1.0);
  EXPECT_NEAR(declared, 1.83193118835444, 1e-13);
  std::vector<double> gaps;
  for (std::size_t steps : {16u, 1024u}) {
    const TimeGrid g(1.0, steps);
    RngStream s(8, steps);
    Accumulator acc;
    for (int k = 0; k < 20000; ++k) {
      const double m = sup_norm(law.sample(g, s));
      acc.add(m * m);
    }
    gaps.push_back(declared - acc.mean());
    EXPECT_LT(acc.mean(), declared + 3.0 * acc.std_error());
  }
  EXPECT_LT(gaps[1], gaps[0]);
  EXPECT_LT(gaps[1], 0.05 * declared);
}

TEST(MessageLaw, RejectsNegativeScale) {
  EXPECT_THROW((void)MessageLaw::constant_gaussian(-1.0), DomainError);
  EXPECT_THROW((void)MessageLaw::brownian(std::nan("")), DomainError);
}

TEST(Expression, EvaluatesGrammar) {
  const auto e = Expression::parse("2 * x(t) - y ^ 2 + max(supy, 0.5) / exp(0) + -t");
  EXPECT_DOUBLE_EQ(e.evaluate({1.0, 3.0, 2.0, 4.0}), 2 * 3.0 - 4.0 + 4.0 - 1.0);
  EXPECT_DOUBLE_EQ(Expression::parse("2^3^2").evaluate({}), 512.0);
  EXPECT_DOUBLE_EQ(Expression::parse("-2^2").evaluate({}), -4.0);
  EXPECT_DOUBLE_EQ(Expression::parse("1.5e1 + pi").evaluate({}), 15.0 + std::numbers::pi);
}

TEST(Expression, ErrorsReportColumn) {
  try {
    (void)Expression::parse("x + foo(1)");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("column 5"), std::string::npos) << e.what();
    EXPECT_EQ(e.field(), "drift");
  }
  EXPECT_THROW((void)Expression::parse("y(s)"), ConfigError);
  EXPECT_THROW((void)Expression::parse("(1 + 2"), ConfigError);
  EXPECT_THROW((void)Expression::parse("1 +"), ConfigError);
  EXPECT_THROW((void)Expression::parse("1 2"), ConfigError);
}

TEST(Expression, SupYIsRunningMaximum) {
  const TimeGrid g(1.0, 4);
  const auto f = expression_drift("supy", {1.0, 1.0, {}});
  const Path y(g, {0.0, -2.0, 1.0, 3.0, 0.0});
  const auto vals = f.evaluate_path(Path(g), y);
  EXPECT_EQ(vals, (std::vector<double>{0.0, 2.0, 2.0, 3.0}));
}

TEST(Presets, UnknownNamesAndParameters) {
  EXPECT_THROW((void)make_preset("nope", {}, 1.0), ConfigError);
  EXPECT_THROW((void)make_preset("constant-drift", {{"sigma", 1.0}}, 1.0), ConfigError);
}

TEST(Presets, LinearFeedbackDeclaresDocumentedConstants) {
  const auto ch = make_preset("linear-feedback", {}, 1.0);
  EXPECT_EQ(ch.drift.constants().K, 2.0);
  EXPECT_EQ(ch.drift.constants().L, 8.0);
  EXPECT_FALSE(ch.drift.constants().M.has_value());
  EXPECT_EQ(*make_preset("bounded-truncated", {}, 1.0).drift.constants().M, 1.0);
  EXPECT_EQ(*make_preset("constant-drift", {{"theta", 2.0}}, 1.5).drift.constants().M, 6.0);
}
