#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "picard/errors.hpp"
#include "picard/grid.hpp"

namespace picard {

/// Declared constants of conditions (L), (G) and optionally (B).
struct Constants {
  double K = 1.0;
  double L = 1.0;
  std::optional<double> M;

  void validate() const {
    if (!(K > 0.0) || !std::isfinite(K)) throw DomainError("declared Lipschitz constant K must be positive");
    if (!(L > 0.0) || !std::isfinite(L)) throw DomainError("declared growth constant L must be positive");
    if (M && (!(*M > 0.0) || !std::isfinite(*M))) throw DomainError("declared bound M must be positive");
  }

  friend bool operator==(const Constants&, const Constants&) = default;
};

/// State of one causal sweep over the knots of a grid.
///
/// `next(i, x, y)` is called for i = 0, 1, ..., in order, and may read x[j], y[j]
/// only for j <= i. Values past i may be stale or unset.
class DriftCursor {
 public:
  virtual ~DriftCursor() = default;
  virtual void reset() = 0;
  virtual double next(std::size_t i, std::span<const double> x, std::span<const double> y) = 0;
};

/// Immutable description of a functional; opens independent cursors.
class DriftKernel {
 public:
  virtual ~DriftKernel() = default;
  [[nodiscard]] virtual std::unique_ptr<DriftCursor> open(const TimeGrid& grid) const = 0;
};

/// Sequential evaluator handed out by a functional. Visiting knot 0 restarts the
/// sweep, so one sweep object can be reused across many paths.
class DriftSweep {
 public:
  DriftSweep(std::shared_ptr<const DriftKernel> kernel, const TimeGrid& grid,
             std::shared_ptr<const std::string> label)
      : kernel_(std::move(kernel)), cursor_(kernel_->open(grid)), grid_(grid), label_(std::move(label)) {}

  double operator()(std::size_t i, std::span<const double> x, std::span<const double> y) {
    if (i == 0) {
      cursor_->reset();
      next_ = 0;
    }
    if (i != next_) {
      throw std::logic_error("functional '" + *label_ + "' must be evaluated at consecutive knots");
    }
    ++next_;
    const double v = cursor_->next(i, x, y);
    if (!std::isfinite(v)) {
      report_non_finite(i, v, x, y);
    }
    return v;
  }

 private:
  [[noreturn]] void report_non_finite(std::size_t i, double v, std::span<const double> x,
                                      std::span<const double> y) const {
    std::ostringstream msg;
    msg << "functional '" << *label_ << "' evaluated to " << v << " at knot " << i << " (t=" << grid_.time(i);
    if (i < x.size()) msg << ", x=" << x[i];
    if (i < y.size()) msg << ", y=" << y[i];
    msg << ")";
    throw NumericError(msg.str(), i);
  }

  std::shared_ptr<const DriftKernel> kernel_;  // cursors may reference kernel state
  std::unique_ptr<DriftCursor> cursor_;
  TimeGrid grid_;
  std::shared_ptr<const std::string> label_;
  std::size_t next_ = 0;
};

namespace detail {

template <class Fn>
class PointwiseKernel final : public DriftKernel {
 public:
  explicit PointwiseKernel(Fn fn) : fn_(std::move(fn)) {}

  [[nodiscard]] std::unique_ptr<DriftCursor> open(const TimeGrid& grid) const override {
    return std::make_unique<Cursor>(fn_, grid);
  }

 private:
  class Cursor final : public DriftCursor {
   public:
    Cursor(const Fn& fn, const TimeGrid& grid) : fn_(fn), grid_(grid) {}
    void reset() override {}
    double next(std::size_t i, std::span<const double> x, std::span<const double> y) override {
      return fn_(grid_.time(i), x.empty() ? 0.0 : x[i], y[i]);
    }

   private:
    const Fn& fn_;
    TimeGrid grid_;
  };

  Fn fn_;
};

using CausalFn =
    std::function<double(const TimeGrid&, std::size_t, std::span<const double>, std::span<const double>)>;

class CausalKernel final : public DriftKernel {
 public:
  explicit CausalKernel(CausalFn fn) : fn_(std::move(fn)) {}

  [[nodiscard]] std::unique_ptr<DriftCursor> open(const TimeGrid& grid) const override {
    return std::make_unique<Cursor>(fn_, grid);
  }

 private:
  class Cursor final : public DriftCursor {
   public:
    Cursor(const CausalFn& fn, const TimeGrid& grid) : fn_(fn), grid_(grid) {}
    void reset() override {}
    double next(std::size_t i, std::span<const double> x, std::span<const double> y) override {
      // Only the prefix up to knot i is visible to user code.
      return fn_(grid_, i, x.empty() ? x : x.first(i + 1), y.first(i + 1));
    }

   private:
    const CausalFn& fn_;
    TimeGrid grid_;
  };

  CausalFn fn_;
};

}  // namespace detail

/// Non-anticipative drift f(t, x, y) evaluated grid-causally, carrying its
/// declared condition constants. Cheap to copy; the kernel is shared.
class DriftFunctional {
 public:
  DriftFunctional(std::shared_ptr<const DriftKernel> kernel, Constants constants, std::string label)
      : kernel_(std::move(kernel)),
        constants_(constants),
        label_(std::make_shared<const std::string>(std::move(label))) {
    constants_.validate();
  }

  /// f(t, x, y) = fn(t, x(t), y(t)).
  template <class Fn>
  [[nodiscard]] static DriftFunctional pointwise(std::string label, Fn fn, Constants constants) {
    return {std::make_shared<detail::PointwiseKernel<Fn>>(std::move(fn)), constants, std::move(label)};
  }

  /// General path functional; `fn` receives the prefixes x[0..i], y[0..i].
  [[nodiscard]] static DriftFunctional causal(std::string label, detail::CausalFn fn, Constants constants) {
    return {std::make_shared<detail::CausalKernel>(std::move(fn)), constants, std::move(label)};
  }

  [[nodiscard]] DriftSweep sweep(const TimeGrid& grid) const { return {kernel_, grid, label_}; }

  /// f at knot i; runs a sweep over knots 0..i.
  [[nodiscard]] double evaluate_at(const TimeGrid& grid, std::size_t i, std::span<const double> x,
                                   std::span<const double> y) const {
    if (i >= grid.knots()) throw DimensionError("knot index outside grid");
    auto s = sweep(grid);
    double v = 0.0;
    for (std::size_t j = 0; j <= i; ++j) v = s(j, x, y);
    return v;
  }

  /// f at knots 0..N-1 (the left endpoints of every increment).
  [[nodiscard]] std::vector<double> evaluate_path(const Path& x, const Path& y) const {
    const TimeGrid& grid = y.grid();
    if (!(x.grid() == grid)) throw DimensionError("message and state paths live on different grids");
    std::vector<double> out(grid.steps());
    auto s = sweep(grid);
    for (std::size_t i = 0; i < grid.steps(); ++i) out[i] = s(i, x.values(), y.values());
    return out;
  }

  [[nodiscard]] const Constants& constants() const noexcept { return constants_; }
  [[nodiscard]] const std::string& label() const noexcept { return *label_; }
  [[nodiscard]] const std::shared_ptr<const DriftKernel>& kernel() const noexcept { return kernel_; }

  [[nodiscard]] DriftFunctional with_constants(Constants c) const { return {kernel_, c, *label_}; }

 private:
  std::shared_ptr<const DriftKernel> kernel_;
  Constants constants_;
  std::shared_ptr<const std::string> label_;
};

/// Non-anticipative diffusion g(t, y). Shares the drift machinery with x unused.
class DiffusionFunctional {
 public:
  /// g == 1.
  [[nodiscard]] static DiffusionFunctional unit() {
    DiffusionFunctional g(DriftFunctional::pointwise("1", [](double, double, double) { return 1.0; }, {}), 1.0);
    g.unit_ = true;
    return g;
  }

  /// g(t, y) = fn(t, y(t)); `regularity_bound` is the declared sup |1/g| if (R) holds.
  template <class Fn>
  [[nodiscard]] static DiffusionFunctional pointwise(std::string label, Fn fn,
                                                     std::optional<double> regularity_bound = std::nullopt) {
    auto wrapped = [fn = std::move(fn)](double t, double, double y) { return fn(t, y); };
    return {DriftFunctional::pointwise(std::move(label), std::move(wrapped), {}), regularity_bound};
  }

  [[nodiscard]] DriftSweep sweep(const TimeGrid& grid) const { return impl_.sweep(grid); }

  [[nodiscard]] double evaluate_at(const TimeGrid& grid, std::size_t i, std::span<const double> y) const {
    return impl_.evaluate_at(grid, i, {}, y);
  }

  [[nodiscard]] bool is_unit() const noexcept { return unit_; }
  [[nodiscard]] std::optional<double> regularity_bound() const noexcept { return regularity_bound_; }
  [[nodiscard]] const std::string& label() const noexcept { return impl_.label(); }

 private:
  DiffusionFunctional(DriftFunctional impl, std::optional<double> regularity_bound)
      : impl_(std::move(impl)), regularity_bound_(regularity_bound) {
    if (regularity_bound_ && !(*regularity_bound_ > 0.0)) {
      throw DomainError("regularity bound on |1/g| must be positive");
    }
  }

  DriftFunctional impl_;
  std::optional<double> regularity_bound_;
  bool unit_ = false;
};

}  // namespace picard
