// Copyright 2026 The pdeforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pdeforge/bench.hpp"
#include "pdeforge/dataset_io.hpp"
#include "pdeforge/error.hpp"
#include "pdeforge/generator.hpp"

namespace pdeforge {

/// Process exit codes of the pdeforge tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,  ///< verify found failing samples; inspect target missing
  kExitGeneration = 2,   ///< generation or solver error
  kExitIo = 3,           ///< I/O, integrity or version error
  kExitUsage = 64,       ///< malformed command line
};

namespace cli_detail {

struct GenerateArgs {
  std::string method = "diffoas";
  std::string pde = "darcy";
  std::size_t grid = 50;
  std::size_t samples = 100;
  std::size_t basis = 0;
  double tol = 1e-5;
  double eta = 0.01;
  std::uint64_t seed = 0;
  std::string out;
  std::size_t threads = 1;
  double delta = 0.0;
  std::size_t max_iter = 1000;
  bool debug_weights = false;
  std::string reuse_pool;
};

struct VerifyArgs {
  std::string data;
  double tol = 1e-12;
};

struct BenchArgs {
  std::string pde = "darcy";
  std::vector<std::size_t> dims{2500, 10000};
  std::vector<double> tols{1e-1, 1e-3, 1e-5, 1e-7};
  std::size_t samples = 10;
  std::size_t repeats = 3;
  std::string format = "csv";
  std::string out = "-";
  std::uint64_t seed = 0;
  std::size_t basis = 0;
  bool with_cg = false;
  bool no_total = false;
  std::size_t threads = 1;
};

struct InspectArgs {
  std::string data;
  std::optional<std::size_t> sample;
  std::string field;
  bool stats = false;
};

inline void telemetry(std::ostream& err, nlohmann::json event) { err << event.dump() << '\n'; }

inline int error_exit(std::ostream& err, const char* cmd, int code, const std::exception& e) {
  telemetry(err, {{"event", "error"}, {"command", cmd}, {"exit_code", code}, {"message", e.what()}});
  return code;
}

/// Maps library exceptions onto exit codes.
template <class Body>
int guarded(const char* cmd, std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const IntegrityError& e) {
    telemetry(err, {{"event", "error"},
                    {"command", cmd},
                    {"exit_code", kExitIo},
                    {"file", e.file()},
                    {"offset", e.offset()},
                    {"message", e.what()}});
    return kExitIo;
  } catch (const IoError& e) {
    return error_exit(err, cmd, kExitIo, e);
  } catch (const VersionError& e) {
    return error_exit(err, cmd, kExitIo, e);
  } catch (const std::filesystem::filesystem_error& e) {
    return error_exit(err, cmd, kExitIo, e);
  } catch (const ParameterError& e) {
    return error_exit(err, cmd, kExitUsage, e);
  } catch (const UsageError& e) {
    return error_exit(err, cmd, kExitUsage, e);
  } catch (const Error& e) {
    return error_exit(err, cmd, kExitGeneration, e);
  } catch (const std::bad_alloc& e) {
    return error_exit(err, cmd, kExitGeneration, e);
  } catch (const std::exception& e) {
    return error_exit(err, cmd, kExitGeneration, e);
  }
}

inline int cmd_generate(const GenerateArgs& a, std::ostream& out, std::ostream& err) {
  return guarded("generate", err, [&] {
    GenerationConfig c;
    c.method = parse_method(a.method);
    c.pde = parse_pde_kind(a.pde);
    c.grid = Grid2D(a.grid);
    c.num_samples = a.samples;
    c.n_basis = a.basis;
    c.solver_tol = a.tol;
    c.noise_eta = a.eta;
    c.master_seed = a.seed;
    c.threads = a.threads;
    c.delta = a.delta;
    c.max_iter = a.max_iter;
    c.log_weights = a.debug_weights;
    GenerateToDirOptions opts;
    if (!a.reuse_pool.empty()) opts.reuse_pool_from = a.reuse_pool;
    const auto res = generate_dataset(c, a.out, opts);
    const auto& s = res.summary;
    if (c.method == GenerationMethod::Classic) {
      telemetry(err, {{"event", "phase"}, {"phase", "solve"}, {"seconds", s.solve_seconds}});
    } else {
      telemetry(err, {{"event", "phase"}, {"phase", "basis"}, {"seconds", s.basis_seconds},
                      {"pool_size", s.pool_size}, {"reused", res.pool_reused}});
      telemetry(err, {{"event", "phase"}, {"phase", "action"}, {"seconds", s.action_seconds}});
    }
    telemetry(err, {{"event", "phase"}, {"phase", "total"}, {"seconds", s.total_seconds}});
    if (!s.skipped.empty())
      telemetry(err, {{"event", "warning"}, {"message", "samples skipped (no convergence)"}, {"indices", s.skipped}});
    out << nlohmann::json{{"out", a.out},
                          {"method", a.method},
                          {"pde", a.pde},
                          {"num_samples", res.manifest.num_samples},
                          {"skipped", s.skipped.size()},
                          {"pool_reused", res.pool_reused}}
               .dump()
        << '\n';
    return static_cast<int>(kExitOk);
  });
}

inline int cmd_verify(const VerifyArgs& a, std::ostream& out, std::ostream& err) {
  return guarded("verify", err, [&] {
    const Dataset ds = Dataset::open(a.data);
    const auto rep = verify_dataset(ds, a.tol);
    out << nlohmann::json{{"data", a.data},
                          {"samples", ds.size()},
                          {"tol", a.tol},
                          {"max_relative_residual", rep.max_residual},
                          {"mean_relative_residual", rep.mean_residual},
                          {"failing", rep.failing.size()},
                          {"passed", rep.passed()}}
               .dump()
        << '\n';
    return static_cast<int>(rep.passed() ? kExitOk : kExitCheckFailed);
  });
}

inline int cmd_bench(const BenchArgs& a, std::ostream& out, std::ostream& err) {
  return guarded("bench", err, [&] {
    BenchConfig c;
    c.pde = parse_pde_kind(a.pde);
    c.dims = a.dims;
    c.tols = a.tols;
    c.samples = a.samples;
    c.repeats = a.repeats;
    c.master_seed = a.seed;
    c.n_basis = a.basis;
    c.with_cg = a.with_cg;
    c.with_total = !a.no_total;
    c.threads = a.threads;
    if (a.format != "csv" && a.format != "json") throw UsageError("--format must be csv or json");
    c.validate();
    BenchReport rep = run_timing_suite(c);
    if (c.threads > 1)
      rep.warnings.push_back("basis construction ran on " + std::to_string(c.threads) +
                             " threads; DiffOAS_total is not a single-core figure");
    for (double tol : c.tols) {
      try {
        rep.regressions.push_back(fit_speedup_regression(rep.records, tol));
        if (rep.regressions.back().degenerate)
          rep.warnings.push_back("regression at tol " + detail::fmt_double(tol) + " is degenerate");
      } catch (const Error& e) {
        rep.warnings.push_back("regression at tol " + detail::fmt_double(tol) + ": " + e.what());
      }
    }
    for (auto& w : check_suite_properties(rep.records)) rep.warnings.push_back(std::move(w));
    for (const auto& w : rep.warnings) telemetry(err, {{"event", "warning"}, {"message", w}});
    if (a.out == "-") {
      emit_report(rep, a.format, out);
    } else {
      std::ofstream f(a.out, std::ios::trunc);
      if (!f) throw IoError("cannot create " + a.out);
      emit_report(rep, a.format, f);
    }
    return static_cast<int>(kExitOk);
  });
}

inline nlohmann::json field_stats(const FieldSample& f) {
  double sum = 0.0;
  for (double v : f.values()) sum += v;
  return {{"min", f.min()},
          {"max", f.max()},
          {"mean", sum / static_cast<double>(f.values().size())},
          {"boundary_max", f.boundary_max_abs()}};
}

inline int cmd_inspect(const InspectArgs& a, std::ostream& out, std::ostream& err) {
  return guarded("inspect", err, [&] {
    const Dataset ds = Dataset::open(a.data);
    const auto& m = ds.manifest();
    const auto names = dataset_field_names(m.pde);
    std::vector<std::string> fields = names;
    if (!a.field.empty()) {
      if (std::find(names.begin(), names.end(), a.field) == names.end()) {
        telemetry(err, {{"event", "error"}, {"command", "inspect"}, {"exit_code", kExitCheckFailed},
                        {"message", "no field '" + a.field + "' in dataset"}});
        return static_cast<int>(kExitCheckFailed);
      }
      fields = {a.field};
    }
    if (a.sample && *a.sample >= ds.size()) {
      telemetry(err, {{"event", "error"}, {"command", "inspect"}, {"exit_code", kExitCheckFailed},
                      {"message", "sample " + std::to_string(*a.sample) + " out of range (dataset has " +
                                      std::to_string(ds.size()) + ")"}});
      return static_cast<int>(kExitCheckFailed);
    }

    nlohmann::json j = {{"pde", std::string(to_string(m.pde))},
                        {"method", m.method},
                        {"grid_interior", m.grid_interior},
                        {"num_samples", m.num_samples},
                        {"fields", names},
                        {"master_seed", m.generation.master_seed},
                        {"n_basis", m.generation.n_basis},
                        {"solver_tol", m.generation.solver_tol}};
    if (a.stats) {
      nlohmann::json st;
      for (const auto& name : fields) {
        if (a.sample) {
          st[name] = field_stats(ds.field(name, *a.sample));
          continue;
        }
        double lo = std::numeric_limits<double>::infinity(), hi = -lo, mean = 0.0, bmax = 0.0;
        for (std::size_t k = 0; k < ds.size(); ++k) {
          const auto s = field_stats(ds.field(name, k));
          lo = std::min(lo, s["min"].get<double>());
          hi = std::max(hi, s["max"].get<double>());
          mean += s["mean"].get<double>();
          bmax = std::max(bmax, s["boundary_max"].get<double>());
        }
        st[name] = {{"min", lo}, {"max", hi}, {"mean", mean / static_cast<double>(ds.size())}, {"boundary_max", bmax}};
      }
      j["stats"] = st;
    }
    if (a.sample && !a.field.empty() && !a.stats) {
      const FieldSample f = ds.field(a.field, *a.sample);
      j["sample"] = *a.sample;
      j["field"] = a.field;
      j["count"] = f.values().size();
      j["values"] = std::vector<double>(f.values().begin(), f.values().end());
    }
    out << j.dump() << '\n';
    return static_cast<int>(kExitOk);
  });
}

}  // namespace cli_detail

/// Runs the pdeforge command line in-process. `args` excludes the program
/// name. Returns the process exit code.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"pdeforge: PDE training-data generation, verification and benchmarking", "pdeforge"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  cli_detail::GenerateArgs g;
  auto* gen = app.add_subcommand("generate", "Generate a dataset");
  gen->add_option("--method", g.method, "Generation pipeline")
      ->check(CLI::IsMember({"diffoas", "classic", "ablation-grf", "ablation-fourier", "ablation-chebyshev"}));
  gen->add_option("--pde", g.pde, "PDE family")->check(CLI::IsMember({"darcy", "helmholtz", "diffusion"}));
  gen->add_option("--grid", g.grid, "Interior grid size n (n*n unknowns)")->check(CLI::Range(1, 4096));
  gen->add_option("--samples", g.samples, "Number of samples N")->check(CLI::PositiveNumber);
  gen->add_option("--basis", g.basis,
                  "Basis pool size l; 0 = 30 (darcy) / 50 (others), ablations 30 (grf) / 100 (fourier, chebyshev)");
  gen->add_option("--tol", g.tol, "GMRES relative tolerance (basis or classic solves)")->check(CLI::PositiveNumber);
  gen->add_option("--eta", g.eta, "Noise level relative to ||u||_inf")->check(CLI::NonNegativeNumber);
  gen->add_option("--seed", g.seed, "Master seed");
  gen->add_option("--out", g.out, "Output directory")->required();
  gen->add_option("--threads", g.threads, "Worker threads (output is independent of this)")
      ->check(CLI::Range(1, 1024));
  gen->add_option("--delta", g.delta, "Weight-sum rejection threshold; 0 = 1e-3*sqrt(l)")
      ->check(CLI::NonNegativeNumber);
  gen->add_option("--max-iter", g.max_iter, "GMRES iteration cap")->check(CLI::PositiveNumber);
  gen->add_flag("--debug-weights", g.debug_weights, "Record per-sample weight sums in the manifest");
  gen->add_option("--reuse-pool", g.reuse_pool, "Directory holding a saved basis pool to reuse when it matches");

  cli_detail::VerifyArgs v;
  auto* ver = app.add_subcommand("verify", "Recompute relative residuals of a dataset");
  ver->add_option("--data", v.data, "Dataset directory")->required();
  ver->add_option("--tol", v.tol, "Maximum allowed relative residual")->check(CLI::PositiveNumber);

  cli_detail::BenchArgs b;
  auto* ben = app.add_subcommand("bench", "Time DiffOAS against GMRES");
  ben->add_option("--pde", b.pde, "PDE family")->check(CLI::IsMember({"darcy", "helmholtz", "diffusion"}));
  ben->add_option("--dims", b.dims, "Matrix dimensions (perfect squares)")->delimiter(',');
  ben->add_option("--tols", b.tols, "GMRES tolerances")->delimiter(',');
  ben->add_option("--samples", b.samples, "Samples per point")->check(CLI::PositiveNumber);
  ben->add_option("--repeats", b.repeats, "Timed repeats per point (median reported)")->check(CLI::Range(3, 1000));
  ben->add_option("--format", b.format, "Report format")->check(CLI::IsMember({"csv", "json"}));
  ben->add_option("--out", b.out, "Report path, '-' for stdout");
  ben->add_option("--seed", b.seed, "Master seed");
  ben->add_option("--basis", b.basis, "Basis pool size; 0 = per-PDE default");
  ben->add_flag("--with-cg", b.with_cg, "Also time CG (darcy only)");
  ben->add_flag("--no-total", b.no_total, "Skip the DiffOAS_total records");
  ben->add_option("--threads", b.threads, "Threads for basis construction")->check(CLI::Range(1, 1024));

  cli_detail::InspectArgs in;
  auto* ins = app.add_subcommand("inspect", "Summarize a dataset");
  ins->add_option("--data", in.data, "Dataset directory")->required();
  ins->add_option("--sample", in.sample, "Sample index");
  ins->add_option("--field", in.field, "Field name");
  ins->add_flag("--stats", in.stats, "Print min/max/mean/boundary-max per field");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? static_cast<int>(kExitOk) : static_cast<int>(kExitUsage);
  }
  for (std::size_t d : b.dims)
    if (d == 0) {
      err << "--dims: dimensions must be positive\n";
      return kExitUsage;
    }

  if (gen->parsed()) return cli_detail::cmd_generate(g, out, err);
  if (ver->parsed()) return cli_detail::cmd_verify(v, out, err);
  if (ben->parsed()) return cli_detail::cmd_bench(b, out, err);
  if (ins->parsed()) return cli_detail::cmd_inspect(in, out, err);
  return kExitUsage;
}

}  // namespace pdeforge
