#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "picard/accumulator.hpp"
#include "picard/bounds.hpp"
#include "picard/density.hpp"
#include "picard/errors.hpp"
#include "picard/functional.hpp"
#include "picard/grid.hpp"
#include "picard/message.hpp"
#include "picard/order.hpp"
#include "picard/parallel.hpp"
#include "picard/path_ops.hpp"
#include "picard/rng.hpp"
#include "picard/solver.hpp"

namespace picard {

struct EstimateBudget {
  std::size_t n_outer = 1000;
  std::size_t n_inner = 100;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
};

struct EstimateReport {
  std::string quantity;
  Order order = Order::limit();
  double estimate = 0.0;  // nats
  double std_error = 0.0;
  std::size_t n_outer = 0;
  std::size_t n_inner = 0;
  std::optional<double> bound;
  /// estimate <= bound + 3 stderr, when a bound is attached.
  std::optional<bool> within_bound;
  std::size_t steps = 0;
  double horizon = 0.0;
  std::uint64_t seed = 0;
  std::size_t workers = 0;

  void attach_bound(double b) {
    bound = b;
    within_bound = estimate <= b + 3.0 * std_error;
  }
};

/// Mutual information with the two divergences it is the difference of, all on
/// the same outer draws.
struct MutualInformationReport {
  EstimateReport mi;
  EstimateReport joint;
  EstimateReport marginal;
  /// mi_rate(n) scaled by the multiplier, for iterate orders under (B).
  std::optional<double> rate_shape;
};

/// Bound curves for a unit-diffusion channel from its declared constants.
[[nodiscard]] inline BoundSet channel_bounds(const DriftFunctional& f, const MessageLaw& law, double horizon,
                                             double p = 2.0, double mi_multiplier = 1.0) {
  const Constants& c = f.constants();
  return compute_bounds(BoundInputs{c.K, c.L, horizon, law.second_moment(horizon), c.M, p, mi_multiplier});
}

namespace detail {

/// Per-worker state for outer draws. Outer draw j takes (x, W) from
/// RngStream(seed, 2j) and inner messages from RngStream(seed, 2j + 1), restarted
/// for every mixture so all mixtures of one draw share their inner messages.
struct DrawContext {
  DrawContext(const DriftFunctional& f, const MessageLaw& law, const TimeGrid& grid, std::uint64_t seed)
      : law(law),
        grid(grid),
        seed(seed),
        density(f, grid),
        builder(f, DiffusionFunctional::unit(), grid),
        x(grid.knots()),
        w(grid.knots()),
        y(grid.knots()),
        y_limit(grid.knots()) {}

  /// Draws (x, W) for outer index j.
  void draw(std::size_t j) {
    RngStream rng(seed, 2 * static_cast<std::uint64_t>(j));
    law.sample_into(grid, rng, x);
    sample_brownian_into(grid, rng, w);
  }

  void build(Order order, std::span<double> out) { builder.build(x, w, order, out); }

  [[nodiscard]] double mixture(std::size_t j, std::span<const double> at, std::size_t n_inner, Order order) {
    RngStream rng(seed, 2 * static_cast<std::uint64_t>(j) + 1);
    return density.mixture(at, law, n_inner, order, rng);
  }

  MessageLaw law;
  TimeGrid grid;
  std::uint64_t seed;
  DensityWorkspace density;
  IterateBuilder builder;
  std::vector<double> x, w, y, y_limit;
};

inline void check_budget(const EstimateBudget& b, bool needs_inner) {
  if (b.n_outer < 2) throw DomainError("estimators need n_outer >= 2");
  if (needs_inner && b.n_inner < 1) throw DomainError("estimators need n_inner >= 1");
}

inline void check_order(Order order) {
  if (!order.is_limit() && order.n() < 1) throw DomainError("estimators need iterate order n >= 1");
}

/// Runs sample(ctx, j) -> std::array<double, N> over all outer draws and
/// accumulates each component; deterministic for any worker count.
template <std::size_t N, class Sample>
std::array<Accumulator, N> outer_loop(const DriftFunctional& f, const MessageLaw& law, const TimeGrid& grid,
                                      const EstimateBudget& budget, Sample&& sample) {
  using Acc = std::array<Accumulator, N>;
  auto block = [&](std::size_t begin, std::size_t end) {
    DrawContext ctx(f, law, grid, budget.seed);
    Acc acc{};
    for (std::size_t j = begin; j < end; ++j) {
      std::array<double, N> v;
      try {
        v = sample(ctx, j);
      } catch (const NumericError& e) {
        throw NumericError("outer draw " + std::to_string(j) + ": " + e.what(), e.knot());
      }
      for (std::size_t k = 0; k < N; ++k) acc[k].add(v[k]);
    }
    return acc;
  };
  const auto parts = run_blocks<Acc>(budget.n_outer, budget.workers, block);
  Acc total{};
  for (const Acc& part : parts) {
    for (std::size_t k = 0; k < N; ++k) total[k].merge(part[k]);
  }
  return total;
}

inline EstimateReport make_report(std::string quantity, Order order, const Accumulator& acc,
                                  const EstimateBudget& budget, std::size_t n_inner, const TimeGrid& grid) {
  EstimateReport r;
  r.quantity = std::move(quantity);
  r.order = order;
  r.estimate = acc.mean();
  r.std_error = acc.std_error();
  r.n_outer = acc.count();
  r.n_inner = n_inner;
  r.steps = grid.steps();
  r.horizon = grid.horizon();
  r.seed = budget.seed;
  r.workers = budget.workers;
  return r;
}

inline std::string order_tag(Order order) { return order.is_limit() ? "Y" : "Y^(" + order.label() + ")"; }

}  // namespace detail

/// D(mu_{Y^(n)} || mu_Y): mean over Y^(n) draws of the difference of the two
/// mixture log densities, sharing inner messages. Attaches the KL rate when
/// `bounds` is given.
[[nodiscard]] inline EstimateReport kl_iterate_vs_limit(const DriftFunctional& f, const MessageLaw& law,
                                                        const TimeGrid& grid, std::size_t n,
                                                        const EstimateBudget& budget,
                                                        const std::optional<BoundSet>& bounds = std::nullopt) {
  if (n < 1) throw DomainError("kl_iterate_vs_limit needs n >= 1");
  detail::check_budget(budget, true);
  const Order order = Order::iterate(n);
  const auto acc = detail::outer_loop<1>(f, law, grid, budget, [&](detail::DrawContext& ctx, std::size_t j) {
    ctx.draw(j);
    ctx.build(order, ctx.y);
    const double iterate = ctx.mixture(j, ctx.y, budget.n_inner, order);
    const double limit = ctx.mixture(j, ctx.y, budget.n_inner, Order::limit());
    return std::array<double, 1>{iterate - limit};
  });
  auto r = detail::make_report("D(mu_{Y^(" + order.label() + ")} || mu_Y)", order, acc[0], budget, budget.n_inner,
                               grid);
  if (bounds) r.attach_bound(bounds->kl_rate(n));
  return r;
}

/// E_xi D(mu_{Y^xi,(n)} || mu_{Y^xi}), the message-averaged fixed-message
/// divergence. By convexity it dominates kl_iterate_vs_limit. No inner loop.
[[nodiscard]] inline EstimateReport kl_iterate_vs_limit_conditional(const DriftFunctional& f, const MessageLaw& law,
                                                                    const TimeGrid& grid, std::size_t n,
                                                                    const EstimateBudget& budget) {
  if (n < 1) throw DomainError("kl_iterate_vs_limit_conditional needs n >= 1");
  detail::check_budget(budget, false);
  const Order order = Order::iterate(n);
  const auto acc = detail::outer_loop<1>(f, law, grid, budget, [&](detail::DrawContext& ctx, std::size_t j) {
    ctx.draw(j);
    ctx.build(order, ctx.y);
    return std::array<double, 1>{ctx.density.fixed(ctx.x, ctx.y, order) - ctx.density.fixed(ctx.x, ctx.y)};
  });
  return detail::make_report("E_xi D(mu_{Y^xi,(" + order.label() + ")} || mu_{Y^xi})", order, acc[0], budget, 0,
                             grid);
}

/// D(mu_{Y^(n)} || mu_W) or D(mu_Y || mu_W).
[[nodiscard]] inline EstimateReport kl_vs_wiener(const DriftFunctional& f, const MessageLaw& law,
                                                 const TimeGrid& grid, Order order, const EstimateBudget& budget) {
  detail::check_order(order);
  detail::check_budget(budget, true);
  const auto acc = detail::outer_loop<1>(f, law, grid, budget, [&](detail::DrawContext& ctx, std::size_t j) {
    ctx.draw(j);
    ctx.build(order, ctx.y);
    return std::array<double, 1>{ctx.mixture(j, ctx.y, budget.n_inner, order)};
  });
  return detail::make_report("D(mu_" + detail::order_tag(order) + " || mu_W)", order, acc[0], budget,
                             budget.n_inner, grid);
}

/// D(mu_{xi,Y^(n)} || mu_xi x mu_W) or D(mu_{xi,Y} || mu_xi x mu_W). Attaches M/2
/// when the drift declares (B).
[[nodiscard]] inline EstimateReport kl_joint_vs_product(const DriftFunctional& f, const MessageLaw& law,
                                                        const TimeGrid& grid, Order order,
                                                        const EstimateBudget& budget) {
  detail::check_order(order);
  detail::check_budget(budget, false);
  const auto acc = detail::outer_loop<1>(f, law, grid, budget, [&](detail::DrawContext& ctx, std::size_t j) {
    ctx.draw(j);
    ctx.build(order, ctx.y);
    return std::array<double, 1>{ctx.density.fixed(ctx.x, ctx.y, order)};
  });
  auto r = detail::make_report("D(mu_{xi," + detail::order_tag(order) + "} || mu_xi x mu_W)", order, acc[0], budget,
                               0, grid);
  if (f.constants().M) r.attach_bound(*f.constants().M / 2.0);
  return r;
}

/// I_T(xi; Y^(n)) or I_T(xi; Y) as joint divergence minus marginal divergence on
/// the same draws. The estimate is exactly joint.estimate - marginal.estimate;
/// its stderr comes from the per-draw differences.
[[nodiscard]] inline MutualInformationReport mutual_information(
    const DriftFunctional& f, const MessageLaw& law, const TimeGrid& grid, Order order, const EstimateBudget& budget,
    const std::optional<BoundSet>& bounds = std::nullopt) {
  detail::check_order(order);
  detail::check_budget(budget, true);
  const auto acc = detail::outer_loop<3>(f, law, grid, budget, [&](detail::DrawContext& ctx, std::size_t j) {
    ctx.draw(j);
    ctx.build(order, ctx.y);
    const double joint = ctx.density.fixed(ctx.x, ctx.y, order);
    const double marginal = ctx.mixture(j, ctx.y, budget.n_inner, order);
    return std::array<double, 3>{joint, marginal, joint - marginal};
  });
  MutualInformationReport out;
  out.joint = detail::make_report("D(mu_{xi," + detail::order_tag(order) + "} || mu_xi x mu_W)", order, acc[0],
                                  budget, 0, grid);
  out.marginal = detail::make_report("D(mu_" + detail::order_tag(order) + " || mu_W)", order, acc[1], budget,
                                     budget.n_inner, grid);
  out.mi = detail::make_report("I_T(xi; " + detail::order_tag(order) + ")", order, acc[2], budget, budget.n_inner,
                               grid);
  out.mi.estimate = out.joint.estimate - out.marginal.estimate;
  if (bounds && !order.is_limit() && f.constants().M) out.rate_shape = bounds->mi_rate(order.n());
  return out;
}

/// All quantities at one iterate order, plus the coupled gap to the limit.
struct SweepRow {
  Order order = Order::limit();
  EstimateReport kl_iterate_vs_limit;
  EstimateReport kl_vs_wiener;
  EstimateReport kl_joint;
  EstimateReport mutual_information;
  /// I(xi; Y^(n)) - I(xi; Y) with stderr from per-draw differences.
  EstimateReport mi_gap;
  std::optional<double> kl_bound;
  std::optional<double> mi_rate;
};

struct ConvergenceSweep {
  std::vector<SweepRow> rows;
  SweepRow limit;
};

/// One pass over shared outer draws evaluating every order in `orders` and the
/// limit. Per-order values coincide with the standalone estimators at the same
/// budget, draw for draw.
[[nodiscard]] inline ConvergenceSweep convergence_sweep(const DriftFunctional& f, const MessageLaw& law,
                                                        const TimeGrid& grid, const std::vector<std::size_t>& orders,
                                                        const EstimateBudget& budget,
                                                        const std::optional<BoundSet>& bounds = std::nullopt) {
  if (orders.empty()) throw DomainError("convergence_sweep needs at least one order");
  for (std::size_t n : orders) {
    if (n < 1) throw DomainError("convergence_sweep orders must be >= 1");
  }
  detail::check_budget(budget, true);

  // Per order: kl_iter, kl_w, joint, mi, gap. Limit: kl_w, joint, mi.
  constexpr std::size_t kPerOrder = 5;
  const std::size_t width = kPerOrder * orders.size() + 3;
  using Acc = std::vector<Accumulator>;
  auto block = [&](std::size_t begin, std::size_t end) {
    detail::DrawContext ctx(f, law, grid, budget.seed);
    Acc acc(width);
    for (std::size_t j = begin; j < end; ++j) {
      try {
        ctx.draw(j);
        ctx.build(Order::limit(), ctx.y_limit);
        const double joint_limit = ctx.density.fixed(ctx.x, ctx.y_limit);
        const double marg_limit = ctx.mixture(j, ctx.y_limit, budget.n_inner, Order::limit());
        const double mi_limit = joint_limit - marg_limit;
        acc[width - 3].add(marg_limit);
        acc[width - 2].add(joint_limit);
        acc[width - 1].add(mi_limit);
        for (std::size_t k = 0; k < orders.size(); ++k) {
          const Order order = Order::iterate(orders[k]);
          ctx.build(order, ctx.y);
          const double marg = ctx.mixture(j, ctx.y, budget.n_inner, order);
          const double marg_limit_at = ctx.mixture(j, ctx.y, budget.n_inner, Order::limit());
          const double joint = ctx.density.fixed(ctx.x, ctx.y, order);
          const double mi = joint - marg;
          Accumulator* a = &acc[kPerOrder * k];
          a[0].add(marg - marg_limit_at);
          a[1].add(marg);
          a[2].add(joint);
          a[3].add(mi);
          a[4].add(mi - mi_limit);
        }
      } catch (const NumericError& e) {
        throw NumericError("outer draw " + std::to_string(j) + ": " + e.what(), e.knot());
      }
    }
    return acc;
  };
  const auto parts = run_blocks<Acc>(budget.n_outer, budget.workers, block);
  Acc total(width);
  for (const Acc& part : parts) {
    for (std::size_t k = 0; k < width; ++k) total[k].merge(part[k]);
  }

  using detail::make_report;
  using detail::order_tag;
  const std::size_t ni = budget.n_inner;
  ConvergenceSweep out;
  SweepRow& lim = out.limit;
  lim.order = Order::limit();
  lim.kl_iterate_vs_limit = make_report("D(mu_Y || mu_Y)", lim.order, Accumulator{}, budget, ni, grid);
  lim.kl_iterate_vs_limit.estimate = 0.0;
  lim.kl_iterate_vs_limit.n_outer = budget.n_outer;
  lim.kl_vs_wiener = make_report("D(mu_Y || mu_W)", lim.order, total[width - 3], budget, ni, grid);
  lim.kl_joint = make_report("D(mu_{xi,Y} || mu_xi x mu_W)", lim.order, total[width - 2], budget, 0, grid);
  lim.mutual_information = make_report("I_T(xi; Y)", lim.order, total[width - 1], budget, ni, grid);
  lim.mutual_information.estimate = lim.kl_joint.estimate - lim.kl_vs_wiener.estimate;
  lim.mi_gap = lim.kl_iterate_vs_limit;
  lim.mi_gap.quantity = "I_T(xi; Y) - I_T(xi; Y)";

  for (std::size_t k = 0; k < orders.size(); ++k) {
    const Order order = Order::iterate(orders[k]);
    const std::string tag = order_tag(order);
    const Accumulator* a = &total[kPerOrder * k];
    SweepRow row;
    row.order = order;
    row.kl_iterate_vs_limit = make_report("D(mu_" + tag + " || mu_Y)", order, a[0], budget, ni, grid);
    row.kl_vs_wiener = make_report("D(mu_" + tag + " || mu_W)", order, a[1], budget, ni, grid);
    row.kl_joint = make_report("D(mu_{xi," + tag + "} || mu_xi x mu_W)", order, a[2], budget, 0, grid);
    row.mutual_information = make_report("I_T(xi; " + tag + ")", order, a[3], budget, ni, grid);
    row.mutual_information.estimate = row.kl_joint.estimate - row.kl_vs_wiener.estimate;
    row.mi_gap = make_report("I_T(xi; " + tag + ") - I_T(xi; Y)", order, a[4], budget, ni, grid);
    row.mi_gap.estimate = row.mutual_information.estimate - lim.mutual_information.estimate;
    if (bounds) {
      row.kl_bound = bounds->kl_rate(orders[k]);
      row.kl_iterate_vs_limit.attach_bound(*row.kl_bound);
      if (f.constants().M) row.mi_rate = bounds->mi_rate(orders[k]);
    }
    if (f.constants().M) row.kl_joint.attach_bound(*f.constants().M / 2.0);
    out.rows.push_back(std::move(row));
  }
  if (f.constants().M) lim.kl_joint.attach_bound(*f.constants().M / 2.0);
  return out;
}

}  // namespace picard
