#pragma once

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "picard/bounds.hpp"
#include "picard/config.hpp"
#include "picard/errors.hpp"
#include "picard/estimators.hpp"
#include "picard/solver.hpp"

namespace picard::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kConfigFailure = 2, kBoundViolation = 3, kNumericFailure = 4 };

/// A finished command: metadata, one table, a JSON mirror and the strict-mode verdict.
struct CommandOutput {
  std::string command;
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  nlohmann::json mirror = nlohmann::json::object();
  bool violation = false;
};

namespace detail {

inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}
inline std::string num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }
inline std::string num(std::size_t v) { return std::to_string(v); }
inline std::string num(std::uint64_t v, int) { return std::to_string(v); }
inline std::string flag(const std::optional<bool>& v) { return v ? (*v ? "1" : "0") : std::string(); }

inline nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

inline CommandOutput start(const std::string& command, const ExperimentConfig& c, const Channel* ch) {
  CommandOutput o;
  o.command = command;
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016" PRIx64, config_hash(c));
  o.meta = {{"picard", kVersion}, {"command", command}, {"config_hash", hash}};
  if (ch) {
    o.meta.emplace_back("channel", ch->name);
    o.meta.emplace_back("drift", ch->drift.label());
    o.meta.emplace_back("message", ch->law.label());
  }
  o.meta.emplace_back("grid", "T=" + num(c.horizon) + " steps=" + num(c.steps));
  o.meta.emplace_back("seed", num(c.seed, 0));
  o.meta.emplace_back("workers", num(c.workers));
  o.meta.emplace_back("units", "nats");
  o.mirror["command"] = command;
  o.mirror["version"] = kVersion;
  o.mirror["config_hash"] = hash;
  o.mirror["config"] = to_json(c);
  return o;
}

inline std::vector<std::string> provenance(const ExperimentConfig& c, std::size_t n_inner) {
  return {num(c.seed, 0), num(c.steps), num(c.n_outer), num(n_inner)};
}

inline void add_row(CommandOutput& o, std::vector<std::string> row, const std::vector<std::string>& prov) {
  row.insert(row.end(), prov.begin(), prov.end());
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t k = 0; k < o.columns.size(); ++k) j[o.columns[k]] = row[k];
  o.mirror["rows"].push_back(std::move(j));
  o.rows.push_back(std::move(row));
}

inline const std::vector<std::string> kProvenance = {"seed", "steps", "n_outer", "n_inner"};

inline void set_columns(CommandOutput& o, std::vector<std::string> cols) {
  cols.insert(cols.end(), kProvenance.begin(), kProvenance.end());
  o.columns = std::move(cols);
  o.mirror["columns"] = o.columns;
  o.mirror["rows"] = nlohmann::json::array();
}

inline EstimateBudget budget_of(const ExperimentConfig& c) { return {c.n_outer, c.n_inner, c.seed, c.workers}; }

inline std::vector<std::size_t> orders_of(const ExperimentConfig& c) {
  std::vector<std::size_t> orders(c.n_max);
  for (std::size_t n = 0; n < c.n_max; ++n) orders[n] = n + 1;
  return orders;
}

}  // namespace detail

/// CSV with a '#' metadata block; no timestamps, so reruns are byte-identical.
[[nodiscard]] inline std::string render_csv(const CommandOutput& o) {
  std::string s;
  for (const auto& [key, value] : o.meta) s += "# " + key + ": " + value + "\n";
  for (std::size_t k = 0; k < o.columns.size(); ++k) s += (k ? "," : "") + o.columns[k];
  s += "\n";
  for (const auto& row : o.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) s += (k ? "," : "") + row[k];
    s += "\n";
  }
  return s;
}

[[nodiscard]] inline std::string render_json(const CommandOutput& o) {
  nlohmann::json j = o.mirror;
  nlohmann::json meta = nlohmann::json::object();
  for (const auto& [key, value] : o.meta) meta[key] = value;
  j["meta"] = meta;
  j["violation"] = o.violation;
  return j.dump(2) + "\n";
}

/// Successive-difference statistics of the Picard iteration against the
/// factorial L2 bound.
[[nodiscard]] inline CommandOutput cmd_solve(const ExperimentConfig& c) {
  const Channel ch = make_channel(c);
  const TimeGrid grid(c.horizon, c.steps);
  const BoundSet bounds = channel_bounds(ch.drift, ch.law, c.horizon, c.p, c.mi_multiplier);
  const IterationStatistics stats =
      iteration_statistics(ch.drift, ch.diffusion, ch.law, grid, c.n_max, c.n_outer, c.seed, c.workers, c.n_ref_extra);

  using detail::num;
  CommandOutput o = detail::start("solve", c, &ch);
  o.meta.emplace_back("reference_order", num(stats.reference_order));
  o.meta.emplace_back("c1", num(bounds.c1()));
  o.meta.emplace_back("c2", num(bounds.c2()));
  detail::set_columns(o, {"n", "successive_sq", "successive_sq_stderr", "picard_l2_bound", "within_bound",
                          "to_reference_sq", "to_reference_sq_stderr", "limit_l2_bound"});
  const auto prov = detail::provenance(c, 0);
  for (std::size_t n = 0; n < c.n_max; ++n) {
    const Accumulator& s = stats.successive[n];
    const Accumulator& r = stats.to_reference[n];
    const double bound = bounds.picard_l2(n);
    const bool ok = s.mean() <= bound + 3.0 * s.std_error();
    o.violation = o.violation || !ok;
    detail::add_row(o,
                    {num(n), num(s.mean()), num(s.std_error()), num(bound), ok ? "1" : "0", num(r.mean()),
                     num(r.std_error()), num(bounds.limit_l2(n))},
                    prov);
  }
  // Reference row: fixed-point residual of the reference path.
  detail::add_row(o,
                  {"ref", num(stats.residual.mean()), num(stats.residual.std_error()), "", "", "0", "0", ""}, prov);
  return o;
}

/// D(mu_{Y^(n)} || mu_Y) and D(mu_{Y^(n)} || mu_W) for n = 1..n_max, plus the limit.
[[nodiscard]] inline CommandOutput cmd_kl(const ExperimentConfig& c) {
  const Channel ch = make_channel(c);
  const TimeGrid grid(c.horizon, c.steps);
  const BoundSet bounds = channel_bounds(ch.drift, ch.law, c.horizon, c.p, c.mi_multiplier);
  const ConvergenceSweep sweep =
      convergence_sweep(ch.drift, ch.law, grid, detail::orders_of(c), detail::budget_of(c), bounds);

  using detail::num;
  CommandOutput o = detail::start("kl", c, &ch);
  detail::set_columns(o, {"n", "kl_iterate_vs_limit", "kl_iterate_vs_limit_stderr", "kl_bound", "within_bound",
                          "kl_vs_wiener", "kl_vs_wiener_stderr", "kl_vs_wiener_bits"});
  const auto prov = detail::provenance(c, c.n_inner);
  const auto emit = [&](const SweepRow& row) {
    const EstimateReport& a = row.kl_iterate_vs_limit;
    const EstimateReport& b = row.kl_vs_wiener;
    if (a.within_bound && !*a.within_bound) o.violation = true;
    detail::add_row(o,
                    {row.order.label(), num(a.estimate), num(a.std_error), num(row.kl_bound),
                     detail::flag(a.within_bound), num(b.estimate), num(b.std_error),
                     num(b.estimate / std::numbers::ln2)},
                    prov);
  };
  for (const SweepRow& row : sweep.rows) emit(row);
  emit(sweep.limit);
  return o;
}

/// I_T(xi; Y^(n)) for n = 1..n_max, the limit, the coupled gap and the rate shape.
[[nodiscard]] inline CommandOutput cmd_mi(const ExperimentConfig& c) {
  const Channel ch = make_channel(c);
  const TimeGrid grid(c.horizon, c.steps);
  const BoundSet bounds = channel_bounds(ch.drift, ch.law, c.horizon, c.p, c.mi_multiplier);
  const ConvergenceSweep sweep =
      convergence_sweep(ch.drift, ch.law, grid, detail::orders_of(c), detail::budget_of(c), bounds);

  using detail::num;
  CommandOutput o = detail::start("mi", c, &ch);
  o.meta.emplace_back("p", num(c.p));
  o.meta.emplace_back("mi_multiplier", num(c.mi_multiplier));
  detail::set_columns(o, {"n", "mi", "mi_stderr", "mi_bits", "limit_mi", "gap", "gap_stderr", "mi_rate", "joint_kl",
                          "joint_kl_stderr", "marginal_kl", "marginal_kl_stderr"});
  const auto prov = detail::provenance(c, c.n_inner);
  const double limit_mi = sweep.limit.mutual_information.estimate;
  const auto emit = [&](const SweepRow& row) {
    const EstimateReport& mi = row.mutual_information;
    if (row.kl_joint.within_bound && !*row.kl_joint.within_bound) o.violation = true;
    detail::add_row(o,
                    {row.order.label(), num(mi.estimate), num(mi.std_error), num(mi.estimate / std::numbers::ln2),
                     num(limit_mi), num(row.mi_gap.estimate), num(row.mi_gap.std_error), num(row.mi_rate),
                     num(row.kl_joint.estimate), num(row.kl_joint.std_error), num(row.kl_vs_wiener.estimate),
                     num(row.kl_vs_wiener.std_error)},
                    prov);
  };
  for (const SweepRow& row : sweep.rows) emit(row);
  emit(sweep.limit);
  return o;
}

/// Flags that override the inputs of `bounds`.
struct BoundOverrides {
  std::optional<double> K, L, M, T, xi_moment;
};

/// Constants and bound curves for n = 0..n_max.
[[nodiscard]] inline CommandOutput cmd_bounds(const ExperimentConfig& c, const BoundOverrides& over = {}) {
  BoundInputs in{1.0, 1.0, c.horizon, 1.0, std::nullopt, c.p, c.mi_multiplier};
  std::optional<Channel> ch;
  if (c.preset || c.drift_expression) {
    ch = make_channel(c);
    const Constants& k = ch->drift.constants();
    in.K = k.K;
    in.L = k.L;
    in.M = k.M;
    in.xi_moment = ch->law.second_moment(c.horizon);
  }
  if (over.K) in.K = *over.K;
  if (over.L) in.L = *over.L;
  if (over.M) in.M = *over.M;
  if (over.T) in.T = *over.T;
  if (over.xi_moment) in.xi_moment = *over.xi_moment;
  const BoundSet b = compute_bounds(in);

  using detail::num;
  CommandOutput o = detail::start("bounds", c, ch ? &*ch : nullptr);
  const std::vector<std::pair<std::string, std::optional<double>>> constants = {
      {"K", in.K},         {"L", in.L},         {"T", in.T},   {"xi_moment", in.xi_moment}, {"M", in.M},
      {"p", in.p},         {"k1", b.k1()},      {"k2", b.k2()}, {"c1", b.c1()},              {"c2", b.c2()},
      {"c3", b.c3()},      {"c1_tilde", b.c1_tilde()},          {"moment_cap", b.moment_cap()},
      {"first_n_kl_below_0.01", static_cast<double>(b.first_n_kl_below(1e-2))}};
  nlohmann::json cj = nlohmann::json::object();
  for (const auto& [key, value] : constants) {
    o.meta.emplace_back(key, value ? num(*value) : "none");
    cj[key] = detail::opt(value);
  }
  o.mirror["constants"] = cj;
  detail::set_columns(o, {"n", "picard_l2", "limit_l2", "kl_rate", "joint_l1", "mi_rate"});
  const auto prov = detail::provenance(c, c.n_inner);
  for (std::size_t n = 0; n <= c.n_max; ++n) {
    const bool pos = n >= 1;
    detail::add_row(o,
                    {num(n), num(b.picard_l2(n)), num(b.limit_l2(n)), pos ? num(b.kl_rate(n)) : "",
                     pos ? num(b.joint_l1(n)) : "", pos ? num(b.mi_rate(n)) : ""},
                    prov);
  }
  return o;
}

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + path.string() + "'", "output.dir");
  f << text;
  if (!f) throw ConfigError("failed writing '" + path.string() + "'", "output.dir");
}

}  // namespace detail

/// Entry point of the command-line tool. Returns the process exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Picard iteration experiments: iterate decay, divergences and mutual information", "picard"};
  app.set_version_flag("--version", kVersion);

  std::string command;
  std::optional<std::string> config_path, preset;
  std::vector<std::string> params;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers, n_max, outer, inner, steps;
  std::optional<std::string> out_dir;
  bool strict = false, json = false;
  BoundOverrides over;
  std::optional<double> p;

  app.add_option("command", command, "solve | kl | mi | bounds")
      ->required()
      ->check(CLI::IsMember({"solve", "kl", "mi", "bounds"}));
  app.add_option("--config", config_path, "JSON experiment config");
  app.add_option("--preset", preset, "built-in channel (overrides the config's channel)");
  app.add_option("--param", params, "preset parameter as key=value (repeatable)");
  app.add_option("--seed", seed, "RNG seed");
  app.add_option("--workers", workers, "worker threads (0 = all cores)");
  app.add_option("--n-max", n_max, "largest iterate order");
  app.add_option("--outer", outer, "outer Monte Carlo draws");
  app.add_option("--inner", inner, "inner message draws per mixture density");
  app.add_option("--steps", steps, "grid steps");
  app.add_option("--T", over.T, "horizon");
  app.add_option("--K", over.K, "Lipschitz constant");
  app.add_option("--L", over.L, "growth constant");
  app.add_option("--M", over.M, "energy bound");
  app.add_option("--xi-moment", over.xi_moment, "E sup|xi|^2 (bounds only)");
  app.add_option("--p", p, "exponent of the mutual-information rate");
  app.add_flag("--strict", strict, "exit 3 when an estimate exceeds its bound by more than 3 stderr");
  app.add_flag("--json", json, "also write (or print) a JSON mirror");
  app.add_option("--out", out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigFailure;
  }

  try {
    ExperimentConfig c;
    if (config_path) {
      c = load_config(*config_path);
    } else if (!preset && command != "bounds") {
      throw ConfigError("give --config or --preset", "--config");
    }
    if (preset) {
      c.preset = *preset;
      c.drift_expression.reset();
      c.preset_params.clear();
    }
    for (const std::string& kv : params) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--param expects key=value, got '" + kv + "'", "--param");
      try {
        c.preset_params[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
      } catch (const std::exception&) {
        throw ConfigError("--param value is not a number: '" + kv + "'", "--param");
      }
    }
    if (seed) c.seed = *seed;
    if (workers) c.workers = *workers;
    if (n_max) c.n_max = *n_max;
    if (outer) c.n_outer = *outer;
    if (inner) c.n_inner = *inner;
    if (steps) c.steps = *steps;
    if (p) c.p = *p;
    if (out_dir) c.output_dir = *out_dir;
    if (json) c.json = true;
    if (strict) c.strict = true;
    if (command != "bounds") {
      if (over.T) c.horizon = *over.T;
      if (over.K) c.K = over.K;
      if (over.L) c.L = over.L;
      if (over.M) c.M = over.M;
    }
    if (c.preset || c.drift_expression) c.validate();

    CommandOutput result;
    if (command == "solve") {
      result = cmd_solve(c);
    } else if (command == "kl") {
      result = cmd_kl(c);
    } else if (command == "mi") {
      result = cmd_mi(c);
    } else {
      result = cmd_bounds(c, over);
    }

    if (c.output_dir.empty()) {
      out << (c.json ? render_json(result) : render_csv(result));
    } else {
      const std::filesystem::path dir(c.output_dir);
      std::error_code ec;
      std::filesystem::create_directories(dir, ec);
      if (ec) throw ConfigError("cannot create output directory '" + c.output_dir + "': " + ec.message(), "output.dir");
      const auto csv = dir / (result.command + ".csv");
      detail::write_file(csv, render_csv(result));
      out << "wrote " << csv.string() << "\n";
      if (c.json) {
        const auto js = dir / (result.command + ".json");
        detail::write_file(js, render_json(result));
        out << "wrote " << js.string() << "\n";
      }
    }
    if (c.strict && result.violation) {
      err << "bound violated by more than 3 stderr\n";
      return kBoundViolation;
    }
    return kOk;
  } catch (const ConfigError& e) {
    err << "config error";
    if (!e.field().empty()) err << " [" << e.field() << "]";
    err << ": " << e.what() << "\n";
    return kConfigFailure;
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << "\n";
    return kConfigFailure;
  } catch (const DimensionError& e) {
    err << "dimension error: " << e.what() << "\n";
    return kConfigFailure;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kNumericFailure;
  }
}

}  // namespace picard::cli
