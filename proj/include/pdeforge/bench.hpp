// Copyright 2026 The pdeforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <charconv>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pdeforge/csr.hpp"
#include "pdeforge/error.hpp"
#include "pdeforge/generator.hpp"
#include "pdeforge/operators.hpp"
#include "pdeforge/solvers/cg.hpp"
#include "pdeforge/solvers/gmres.hpp"

namespace pdeforge {

inline constexpr const char* kMethodDiffOasTotal = "DiffOAS_total";
inline constexpr const char* kMethodDiffOasAction = "DiffOAS_action";
inline constexpr const char* kMethodGmres = "GMRES";
inline constexpr const char* kMethodCg = "CG";

/// One timed (method, dim, tol) point. median_seconds covers all `samples`.
struct BenchRecord {
  std::string method;
  PdeKind pde = PdeKind::Darcy;
  std::size_t dim = 0;
  std::optional<double> tol;
  std::size_t samples = 0;
  std::size_t repeats = 0;
  double median_seconds = 0.0;
  std::vector<double> per_repeat;
  bool flagged = false;

  double seconds_per_sample() const { return median_seconds / static_cast<double>(samples); }
  friend bool operator==(const BenchRecord&, const BenchRecord&) = default;
};

struct RegressionResult {
  double tol = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
  double pearson_r = 0.0;
  bool degenerate = false;
  std::vector<std::pair<std::size_t, double>> points;  ///< (dim, speedup)
  friend bool operator==(const RegressionResult&, const RegressionResult&) = default;
};

struct BenchConfig {
  PdeKind pde = PdeKind::Darcy;
  std::vector<std::size_t> dims{2500};
  std::vector<double> tols{1e-1, 1e-3, 1e-5, 1e-7};
  std::size_t samples = 10;
  std::size_t repeats = 3;
  std::uint64_t master_seed = 0;
  std::size_t n_basis = 0;
  std::size_t max_iter = 1000;
  double basis_tol = 1e-5;
  bool with_total = true;
  bool with_cg = false;
  std::size_t threads = 1;

  void validate() const {
    if (samples < 1) throw ParameterError("bench: samples must be >= 1");
    if (repeats < 3) throw ParameterError("bench: repeats must be >= 3");
    if (dims.empty()) throw ParameterError("bench: no dims");
    for (std::size_t d : dims) (void)grid_for_dim(d);
    for (double t : tols)
      if (!(t > 0.0)) throw ParameterError("bench: tolerances must be > 0");
  }

  /// Interior grid whose unknown count equals dim; throws if dim is not a
  /// perfect square.
  static Grid2D grid_for_dim(std::size_t dim) {
    auto n = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(dim))));
    while (n * n > dim) --n;
    while ((n + 1) * (n + 1) <= dim) ++n;
    if (n == 0 || n * n != dim)
      throw ParameterError("bench: dim " + std::to_string(dim) + " is not the square of an interior grid size");
    return Grid2D(n);
  }
};

struct BenchReport {
  std::vector<BenchRecord> records;
  std::vector<RegressionResult> regressions;
  std::vector<std::string> warnings;
};

namespace detail {

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

inline double timer_tick_seconds() {
  using P = std::chrono::steady_clock::period;
  return static_cast<double>(P::num) / static_cast<double>(P::den);
}

inline constexpr double kMinTicks = 100.0;

template <class Run>
double timed(Run&& run) {
  const auto t0 = std::chrono::steady_clock::now();
  run();
  return seconds_since(t0);
}

/// One warm-up run, then `repeats` timed runs.
template <class Run>
std::vector<double> time_repeats(std::size_t repeats, Run&& run) {
  run();
  std::vector<double> out;
  for (std::size_t r = 0; r < repeats; ++r) out.push_back(timed(run));
  return out;
}

struct PreparedSample {
  CsrMatrix A;
  std::vector<double> b;
};

inline std::vector<PreparedSample> prepare_samples(const PdeSampler& sampler, std::uint64_t seed, std::size_t from,
                                                   std::size_t to) {
  std::vector<PreparedSample> out;
  for (std::size_t k = from; k < to; ++k) {
    RngStream rng(seed, StreamRole::SampleParams, k);
    auto d = sampler.draw(rng);
    out.push_back({assemble(d.coefficients), d.forcing.interior()});
  }
  return out;
}

}  // namespace detail

/// Times DiffOAS (total and action-only) and GMRES (and optionally CG) over
/// the given dims and tolerances. Coefficient draws and operator assembly are
/// done outside the timed regions for every method.
inline BenchReport run_timing_suite(const BenchConfig& cfg) {
  cfg.validate();
  BenchReport report;
  const double tick = detail::timer_tick_seconds();

  for (std::size_t dim : cfg.dims) {
    const Grid2D grid = BenchConfig::grid_for_dim(dim);
    GenerationConfig gen;
    gen.pde = cfg.pde;
    gen.grid = grid;
    gen.num_samples = cfg.samples;
    gen.method = GenerationMethod::DiffOAS;
    gen.solver_tol = cfg.basis_tol;
    gen.max_iter = cfg.max_iter;
    gen.n_basis = cfg.n_basis;
    gen.master_seed = cfg.master_seed;
    gen.threads = cfg.threads;
    const PdeSampler sampler(cfg.pde, grid, gen.params());

    const BasisPool pool = build_basis_pool(gen);
    const SolutionCombiner combiner(pool);
    const double delta = gen.weight_delta();

    // Action phase, escalating the sample count until the timer resolves it.
    std::size_t action_samples = cfg.samples;
    auto prepared = detail::prepare_samples(sampler, cfg.master_seed, 0, action_samples);
    std::vector<double> action_times;
    double sink = 0.0;
    for (;;) {
      auto run = [&] {
        for (std::size_t k = 0; k < action_samples; ++k) {
          RngStream w(cfg.master_seed, StreamRole::Weights, k);
          RngStream nz(cfg.master_seed, StreamRole::Noise, k);
          auto comb = combiner.combine(w, nz, gen.noise_eta, delta);
          const auto f = apply_operator(prepared[k].A, comb.u.interior());
          sink += f[f.size() / 2];
        }
      };
      action_times = detail::time_repeats(cfg.repeats, run);
      if (detail::median(action_times) >= detail::kMinTicks * tick) break;
      const std::size_t grown = action_samples * 2;
      auto more = detail::prepare_samples(sampler, cfg.master_seed, action_samples, grown);
      for (auto& p : more) prepared.push_back(std::move(p));
      report.warnings.push_back("dim " + std::to_string(dim) + ": action phase below timer resolution, samples " +
                                std::to_string(action_samples) + " -> " + std::to_string(grown));
      action_samples = grown;
    }
    if (!std::isfinite(sink)) report.warnings.push_back("dim " + std::to_string(dim) + ": non-finite action output");
    report.records.push_back({kMethodDiffOasAction, cfg.pde, dim, std::nullopt, action_samples, cfg.repeats,
                              detail::median(action_times), action_times, false});

    if (cfg.with_total) {
      std::vector<double> totals;
      auto null_sink = [](std::size_t, SampleTriple&&) {};
      for (std::size_t r = 0; r < cfg.repeats; ++r)
        totals.push_back(detail::timed([&] { generate_diffoas(gen, null_sink); }));
      report.records.push_back({kMethodDiffOasTotal, cfg.pde, dim, cfg.basis_tol, cfg.samples, cfg.repeats,
                                detail::median(totals), totals, false});
    }

    auto time_solver = [&](const char* method, double tol, auto&& solve) {
      SolveOptions opts;
      opts.tol = tol;
      opts.max_iter = cfg.max_iter;
      bool flagged = false;
      std::size_t samples = cfg.samples;
      std::vector<double> times;
      for (;;) {
        // warm-up on the first sample only; full solves are expensive
        (void)solve(prepared[0].A, prepared[0].b, opts);
        times.clear();
        for (std::size_t r = 0; r < cfg.repeats; ++r) {
          double t = 0.0;
          for (std::size_t k = 0; k < samples; ++k) {
            const auto rep = solve(prepared[k].A, prepared[k].b, opts);
            t += rep.wall_time;
            if (!rep.converged) flagged = true;
          }
          times.push_back(t);
        }
        if (detail::median(times) >= detail::kMinTicks * tick || samples >= prepared.size()) break;
        samples = std::min(prepared.size(), samples * 2);
      }
      if (flagged)
        report.warnings.push_back(std::string(method) + " dim " + std::to_string(dim) + " tol " +
                                  std::to_string(tol) + ": some solves did not converge");
      report.records.push_back(
          {method, cfg.pde, dim, tol, samples, cfg.repeats, detail::median(times), times, flagged});
    };

    for (double tol : cfg.tols) {
      time_solver(kMethodGmres, tol, [](const CsrMatrix& A, const std::vector<double>& b, const SolveOptions& o) {
        return gmres(A, b, o);
      });
    }
    if (cfg.with_cg) {
      if (cfg.pde != PdeKind::Darcy) {
        report.warnings.push_back("CG skipped: operator for " + std::string(to_string(cfg.pde)) +
                                  " is not symmetric positive definite");
      } else {
        for (double tol : cfg.tols)
          time_solver(kMethodCg, tol, [](const CsrMatrix& A, const std::vector<double>& b, const SolveOptions& o) {
            return cg(A, b, o);
          });
      }
    }
  }
  return report;
}

/// Least-squares line of speedup(n) = GMRES(n, tol) / DiffOAS_action(n)
/// against n, using per-sample times. If largest > 0 only the `largest`
/// biggest dims are used.
inline RegressionResult fit_speedup_regression(const std::vector<BenchRecord>& records, double tol,
                                               std::size_t largest = 0) {
  std::map<std::size_t, double> gm, act;
  for (const auto& r : records) {
    if (r.method == kMethodGmres && r.tol && std::abs(*r.tol - tol) <= 1e-12 * tol) gm[r.dim] = r.seconds_per_sample();
    if (r.method == kMethodDiffOasAction) act[r.dim] = r.seconds_per_sample();
  }
  RegressionResult res;
  res.tol = tol;
  for (const auto& [dim, g] : gm) {
    auto it = act.find(dim);
    if (it == act.end()) continue;
    if (!(it->second > 0.0))
      throw ResolutionError("action time at dim " + std::to_string(dim) +
                            " is zero at timer resolution; increase samples per point");
    res.points.emplace_back(dim, g / it->second);
  }
  if (largest > 0 && res.points.size() > largest)
    res.points.erase(res.points.begin(), res.points.end() - static_cast<std::ptrdiff_t>(largest));
  if (res.points.size() < 3)
    throw ParameterError("speedup regression needs >= 3 dims with GMRES and action records, got " +
                         std::to_string(res.points.size()));
  const double m = static_cast<double>(res.points.size());
  double sx = 0.0, sy = 0.0;
  for (const auto& [x, y] : res.points) {
    sx += static_cast<double>(x);
    sy += y;
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (const auto& [x, y] : res.points) {
    const double dx = static_cast<double>(x) - mx, dy = y - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0) throw ParameterError("speedup regression needs distinct dims");
  res.slope = sxy / sxx;
  res.intercept = my - res.slope * mx;
  if (syy == 0.0) {
    res.slope = 0.0;
    res.intercept = my;
    res.pearson_r = 0.0;
    res.degenerate = true;
  } else {
    res.pearson_r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  }
  return res;
}

/// Shape checks over a finished suite: tolerance monotonicity, action-time
/// scaling, and speedup growth over the three largest dims.
inline std::vector<std::string> check_suite_properties(const std::vector<BenchRecord>& records) {
  std::vector<std::string> out;
  std::map<std::size_t, std::vector<std::pair<double, double>>> by_dim;
  std::map<std::size_t, double> act;
  for (const auto& r : records) {
    if (r.method == kMethodGmres && r.tol) by_dim[r.dim].emplace_back(*r.tol, r.seconds_per_sample());
    if (r.method == kMethodDiffOasAction) act[r.dim] = r.seconds_per_sample();
  }
  std::size_t inversions = 0;
  for (auto& [dim, v] : by_dim) {
    std::sort(v.begin(), v.end(), [](auto& a, auto& b) { return a.first > b.first; });
    for (std::size_t i = 1; i < v.size(); ++i)
      if (v[i].second < v[i - 1].second) ++inversions;
  }
  if (inversions > 1)
    out.push_back("GMRES time not monotone in tolerance: " + std::to_string(inversions) + " inversions");
  for (auto it = act.begin(); it != act.end() && std::next(it) != act.end(); ++it) {
    auto nx = std::next(it);
    const double growth = nx->second / it->second;
    const double linear = static_cast<double>(nx->first) / static_cast<double>(it->first);
    if (growth > 1.5 * linear)
      out.push_back("action time grows faster than linear between dims " + std::to_string(it->first) + " and " +
                    std::to_string(nx->first));
  }
  std::vector<std::pair<std::size_t, double>> speedup;
  for (const auto& [dim, v] : by_dim)
    for (const auto& [tol, t] : v)
      if (std::abs(tol - 1e-5) <= 1e-17 && act.count(dim) && act[dim] > 0.0) speedup.emplace_back(dim, t / act[dim]);
  const std::size_t first = speedup.size() > 3 ? speedup.size() - 3 : 0;
  for (std::size_t i = first + 1; i < speedup.size(); ++i)
    if (!(speedup[i].second > speedup[i - 1].second))
      out.push_back("speedup at tol 1e-05 does not increase from dim " + std::to_string(speedup[i - 1].first) +
                    " to " + std::to_string(speedup[i].first));
  return out;
}

// ---------------------------------------------------------------------------
// Report output

namespace detail {

/// Shortest round-trip decimal form.
inline std::string fmt_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace detail

inline void emit_report_csv(const BenchReport& rep, std::ostream& out) {
  out << "method,pde,dim,tol,samples,repeats,median_seconds\n";
  for (const auto& r : rep.records)
    out << r.method << ',' << to_string(r.pde) << ',' << r.dim << ',' << (r.tol ? detail::fmt_double(*r.tol) : "")
        << ',' << r.samples << ',' << r.repeats << ',' << detail::fmt_double(r.median_seconds) << '\n';
  const std::string pde = rep.records.empty() ? "" : std::string(to_string(rep.records.front().pde));
  for (const auto& g : rep.regressions) {
    const std::string t = detail::fmt_double(g.tol);
    out << "regression_slope," << pde << ",," << t << ",,," << detail::fmt_double(g.slope) << '\n';
    out << "regression_intercept," << pde << ",," << t << ",,," << detail::fmt_double(g.intercept) << '\n';
    out << "regression_pearson_r," << pde << ",," << t << ",,," << detail::fmt_double(g.pearson_r) << '\n';
  }
}

inline nlohmann::json report_to_json(const BenchReport& rep) {
  nlohmann::json recs = nlohmann::json::array();
  for (const auto& r : rep.records)
    recs.push_back({{"method", r.method},
                    {"pde", std::string(to_string(r.pde))},
                    {"dim", r.dim},
                    {"tol", r.tol ? nlohmann::json(*r.tol) : nlohmann::json(nullptr)},
                    {"samples", r.samples},
                    {"repeats", r.repeats},
                    {"median_seconds", r.median_seconds},
                    {"per_repeat", r.per_repeat},
                    {"flagged", r.flagged}});
  nlohmann::json regs = nlohmann::json::array();
  for (const auto& g : rep.regressions) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& [d, s] : g.points) pts.push_back({d, s});
    regs.push_back({{"tol", g.tol},
                    {"slope", g.slope},
                    {"intercept", g.intercept},
                    {"pearson_r", g.pearson_r},
                    {"degenerate", g.degenerate},
                    {"points", pts}});
  }
  return {{"records", recs}, {"regression", regs}, {"warnings", rep.warnings}};
}

inline BenchReport report_from_json(const nlohmann::json& j) {
  BenchReport rep;
  for (const auto& r : j.at("records")) {
    BenchRecord b;
    b.method = r.at("method").get<std::string>();
    b.pde = parse_pde_kind(r.at("pde").get<std::string>());
    b.dim = r.at("dim").get<std::size_t>();
    if (!r.at("tol").is_null()) b.tol = r.at("tol").get<double>();
    b.samples = r.at("samples").get<std::size_t>();
    b.repeats = r.at("repeats").get<std::size_t>();
    b.median_seconds = r.at("median_seconds").get<double>();
    b.per_repeat = r.at("per_repeat").get<std::vector<double>>();
    b.flagged = r.at("flagged").get<bool>();
    rep.records.push_back(std::move(b));
  }
  for (const auto& g : j.at("regression")) {
    RegressionResult r;
    r.tol = g.at("tol").get<double>();
    r.slope = g.at("slope").get<double>();
    r.intercept = g.at("intercept").get<double>();
    r.pearson_r = g.at("pearson_r").get<double>();
    r.degenerate = g.at("degenerate").get<bool>();
    for (const auto& p : g.at("points")) r.points.emplace_back(p.at(0).get<std::size_t>(), p.at(1).get<double>());
    rep.regressions.push_back(std::move(r));
  }
  rep.warnings = j.at("warnings").get<std::vector<std::string>>();
  return rep;
}

inline void emit_report(const BenchReport& rep, const std::string& format, std::ostream& out) {
  if (format == "csv") {
    emit_report_csv(rep, out);
  } else if (format == "json") {
    out << report_to_json(rep).dump(2) << '\n';
  } else {
    throw ParameterError("unknown report format '" + format + "'");
  }
  if (!out) throw IoError("failed to write bench report");
}

/// Parses the record rows of a CSV report (regression rows are skipped).
inline std::vector<BenchRecord> read_report_csv(std::istream& in) {
  std::vector<BenchRecord> out;
  std::string line;
  if (!std::getline(in, line)) return out;
  while (std::getline(in, line)) {
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
    if (line.ends_with(',')) cols.emplace_back();
    if (cols.size() != 7) throw ParameterError("bench csv: expected 7 columns in '" + line + "'");
    if (cols[0].starts_with("regression_")) continue;
    BenchRecord r;
    r.method = cols[0];
    r.pde = parse_pde_kind(cols[1]);
    r.dim = std::stoull(cols[2]);
    if (!cols[3].empty()) r.tol = std::stod(cols[3]);
    r.samples = std::stoull(cols[4]);
    r.repeats = std::stoull(cols[5]);
    r.median_seconds = std::stod(cols[6]);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace pdeforge
