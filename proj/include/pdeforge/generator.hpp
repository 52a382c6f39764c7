// Copyright 2026 The pdeforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "pdeforge/csr.hpp"
#include "pdeforge/dataset_io.hpp"
#include "pdeforge/error.hpp"
#include "pdeforge/fields.hpp"
#include "pdeforge/grid.hpp"
#include "pdeforge/operators.hpp"
#include "pdeforge/rng.hpp"
#include "pdeforge/solvers/gmres.hpp"

namespace pdeforge {

enum class GenerationMethod { Classic, DiffOAS, AblationGrf, AblationFourier, AblationChebyshev };

inline std::string_view to_string(GenerationMethod m) {
  switch (m) {
    case GenerationMethod::Classic: return "classic";
    case GenerationMethod::DiffOAS: return "diffoas";
    case GenerationMethod::AblationGrf: return "ablation-grf";
    case GenerationMethod::AblationFourier: return "ablation-fourier";
    case GenerationMethod::AblationChebyshev: return "ablation-chebyshev";
  }
  return "?";
}

inline GenerationMethod parse_method(std::string_view s) {
  for (auto m : {GenerationMethod::Classic, GenerationMethod::DiffOAS, GenerationMethod::AblationGrf,
                 GenerationMethod::AblationFourier, GenerationMethod::AblationChebyshev})
    if (to_string(m) == s) return m;
  throw ParameterError("unknown method '" + std::string(s) + "'");
}

inline bool is_ablation(GenerationMethod m) {
  return m == GenerationMethod::AblationGrf || m == GenerationMethod::AblationFourier ||
         m == GenerationMethod::AblationChebyshev;
}

/// Coefficient and forcing distributions for one PDE family.
///
/// Darcy: a = exp(GRF(7, 2.5)), f = GRF(7, 2.5).
/// Helmholtz: k2 = GRF(3, 2)/10, f = GRF(3, 2)/10.
/// DiffusionReaction: k = 10 exp(GRF(3, 2)), q ~ U[0,1], f = GRF(3, 2).
struct PdeFieldParams {
  GrfParams coefficient;
  GrfParams forcing;
  double q_lo = 0.0;
  double q_hi = 1.0;

  static PdeFieldParams defaults(PdeKind pde) {
    PdeFieldParams p;
    switch (pde) {
      case PdeKind::Darcy:
        p.coefficient = {7.0, 2.5, 1.0, 0.0, FieldTransform::Exp};
        p.forcing = {7.0, 2.5, 1.0, 0.0, FieldTransform::None};
        break;
      case PdeKind::Helmholtz:
        p.coefficient = {3.0, 2.0, 0.1, 0.0, FieldTransform::None};
        p.forcing = {3.0, 2.0, 0.1, 0.0, FieldTransform::None};
        break;
      case PdeKind::DiffusionReaction:
        p.coefficient = {3.0, 2.0, 1.0, std::log(10.0), FieldTransform::Exp};
        p.forcing = {3.0, 2.0, 1.0, 0.0, FieldTransform::None};
        break;
    }
    return p;
  }

  nlohmann::json to_json(PdeKind pde) const {
    auto grf = [](const GrfParams& g) {
      return nlohmann::json{{"kind", "grf"},
                            {"tau", g.tau},
                            {"alpha", g.alpha},
                            {"scale", g.scale},
                            {"offset", g.offset},
                            {"transform", g.transform == FieldTransform::Exp ? "exp" : "none"}};
    };
    nlohmann::json j;
    j[coefficient_field_names(pde).front()] = grf(coefficient);
    if (pde == PdeKind::DiffusionReaction) j["q"] = {{"kind", "uniform"}, {"lo", q_lo}, {"hi", q_hi}};
    j["f"] = grf(forcing);
    j["noise"] = grf({3.0, 2.0, 1.0, 0.0, FieldTransform::None});
    return j;
  }
};

inline std::size_t default_n_basis(PdeKind pde) { return pde == PdeKind::Darcy ? 30 : 50; }

inline std::size_t default_ablation_pool_size(GenerationMethod m) {
  return m == GenerationMethod::AblationGrf ? 30 : 100;
}

struct GenerationConfig {
  PdeKind pde = PdeKind::Darcy;
  Grid2D grid{32};
  std::size_t num_samples = 100;
  GenerationMethod method = GenerationMethod::DiffOAS;
  double solver_tol = 1e-5;
  std::size_t max_iter = 1000;
  std::size_t n_basis = 0;  ///< 0 selects the per-PDE / per-ablation default
  double noise_eta = 0.01;
  double delta = 0.0;  ///< 0 selects 1e-3 * sqrt(l)
  std::uint64_t master_seed = 0;
  std::optional<PdeFieldParams> field_params;
  std::size_t threads = 1;
  bool log_weights = false;

  std::size_t pool_size() const {
    if (n_basis != 0) return n_basis;
    return is_ablation(method) ? default_ablation_pool_size(method) : default_n_basis(pde);
  }
  double weight_delta() const {
    return delta > 0.0 ? delta : 1e-3 * std::sqrt(static_cast<double>(pool_size()));
  }
  PdeFieldParams params() const { return field_params.value_or(PdeFieldParams::defaults(pde)); }

  void validate() const {
    if (num_samples < 1) throw ParameterError("num_samples must be >= 1");
    if (!(solver_tol > 0.0)) throw ParameterError("solver_tol must be > 0");
    if (max_iter < 1) throw ParameterError("max_iter must be >= 1");
    if (!(noise_eta >= 0.0) || !std::isfinite(noise_eta)) throw ParameterError("noise_eta must be >= 0");
    if (delta < 0.0) throw ParameterError("delta must be > 0");
    if (threads < 1) throw ParameterError("threads must be >= 1");
    const auto p = params();
    p.coefficient.validate();
    p.forcing.validate();
    if (!(p.q_lo < p.q_hi)) throw ParameterError("q bounds must satisfy lo < hi");
  }
};

/// Samplers for one PDE family on one grid; draws are pure functions of the
/// RngStream handed in.
class PdeSampler {
 public:
  PdeSampler(PdeKind pde, const Grid2D& grid, const PdeFieldParams& params)
      : pde_(pde), grid_(grid), params_(params), coeff_(grid, params.coefficient), forcing_(grid, params.forcing) {}

  struct Draw {
    PdeCoefficients coefficients;
    FieldSample forcing;
  };

  /// Coefficients first, then forcing, from the same stream.
  Draw draw(RngStream& rng) const {
    switch (pde_) {
      case PdeKind::Darcy: {
        auto a = coeff_.sample(rng);
        return {DarcyCoefficients{std::move(a)}, forcing_.sample(rng)};
      }
      case PdeKind::Helmholtz: {
        auto k2 = coeff_.sample(rng);
        return {HelmholtzCoefficients{std::move(k2)}, forcing_.sample(rng)};
      }
      case PdeKind::DiffusionReaction: {
        auto k = coeff_.sample(rng);
        auto q = sample_uniform(grid_, params_.q_lo, params_.q_hi, rng);
        return {DiffusionReactionCoefficients{std::move(k), std::move(q)}, forcing_.sample(rng)};
      }
    }
    throw ParameterError("PdeSampler: bad pde");
  }

  PdeCoefficients draw_coefficients(RngStream& rng) const { return draw(rng).coefficients; }

  PdeKind pde() const noexcept { return pde_; }
  const Grid2D& grid() const noexcept { return grid_; }

 private:
  PdeKind pde_;
  Grid2D grid_;
  PdeFieldParams params_;
  GrfSampler coeff_;
  GrfSampler forcing_;
};

struct BasisProvenance {
  StreamRole role = StreamRole::BasisParams;
  std::size_t stream_index = 0;
  std::size_t iterations = 0;
  double relative_residual = 0.0;
  double solve_seconds = 0.0;
};

/// Solution functions u_1..u_l whose random combinations become new samples.
struct BasisPool {
  Grid2D grid{1};
  std::vector<FieldSample> basis;
  std::vector<BasisProvenance> provenance;

  std::size_t size() const noexcept { return basis.size(); }
};

namespace detail {

/// Runs body(i) for i in [0, count) on `threads` workers. Rethrows the
/// exception of the lowest failing index.
template <class Body>
void parallel_for(std::size_t count, std::size_t threads, Body&& body) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t nthreads = std::min(threads, count);
  pool.reserve(nthreads);
  for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

/// Solves l independent PDE instances (streams BasisParams/i) with GMRES.
inline BasisPool build_basis_pool(const GenerationConfig& config) {
  config.validate();
  const std::size_t l = config.pool_size();
  const PdeSampler sampler(config.pde, config.grid, config.params());
  BasisPool pool;
  pool.grid = config.grid;
  pool.basis.assign(l, FieldSample(config.grid));
  pool.provenance.resize(l);
  SolveOptions opts;
  opts.tol = config.solver_tol;
  opts.max_iter = config.max_iter;
  detail::parallel_for(l, config.threads, [&](std::size_t i) {
    RngStream rng(config.master_seed, StreamRole::BasisParams, i);
    auto d = sampler.draw(rng);
    const CsrMatrix A = assemble(d.coefficients);
    const auto rep = gmres(A, d.forcing.interior(), opts);
    if (!rep.converged)
      throw BasisConstructionError(i, "GMRES did not reach tol " + std::to_string(config.solver_tol) +
                                          " (relative residual " + std::to_string(rep.final_relative_residual) +
                                          " after " + std::to_string(rep.iterations) + " iterations)");
    pool.basis[i].set_interior(rep.x);
    pool.provenance[i] = {StreamRole::BasisParams, i, rep.iterations, rep.final_relative_residual, rep.wall_time};
  });
  return pool;
}

enum class AblationBasis { GrfField, FourierSine, Chebyshev };

/// Replacement pools for the ablation study: masked raw GRF(7, 2.5) draws,
/// the first l Fourier sine modes, or the first l windowed Chebyshev products.
inline BasisPool build_ablation_pool(const Grid2D& grid, AblationBasis kind, std::size_t count,
                                     std::uint64_t master_seed) {
  BasisPool pool;
  pool.grid = grid;
  pool.basis.reserve(count);
  pool.provenance.resize(count);
  switch (kind) {
    case AblationBasis::GrfField: {
      const GrfSampler grf(grid, {7.0, 2.5, 1.0, 0.0, FieldTransform::None});
      const FieldSample mask = boundary_decay_mask(grid);
      for (std::size_t i = 0; i < count; ++i) {
        RngStream rng(master_seed, StreamRole::BasisParams, i);
        FieldSample f = grf.sample_raw(rng);
        for (std::size_t p = 0; p < f.values().size(); ++p) f.values()[p] *= mask.values()[p];
        pool.basis.push_back(std::move(f));
        pool.provenance[i].stream_index = i;
      }
      break;
    }
    case AblationBasis::FourierSine:
      for (std::size_t i = 0; i < count; ++i) pool.basis.push_back(fourier_basis_field(grid, i + 1));
      break;
    case AblationBasis::Chebyshev:
      for (std::size_t i = 0; i < count; ++i) pool.basis.push_back(chebyshev_basis_field(grid, i + 1));
      break;
  }
  return pool;
}

/// alpha_i = mu_i / sum(mu), or nullopt when |sum(mu)| < delta.
inline std::optional<std::vector<double>> normalize_weights(std::span<const double> mu, double delta) {
  double s = 0.0;
  for (double m : mu) s += m;
  if (!(std::abs(s) >= delta)) return std::nullopt;
  std::vector<double> alpha(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) alpha[i] = mu[i] / s;
  return alpha;
}

inline constexpr int kMaxWeightDraws = 100;

/// Draws mu ~ N(0, I_l) until |sum(mu)| >= delta and normalizes.
inline std::vector<double> draw_weights(RngStream& rng, std::size_t l, double delta) {
  if (l == 0) throw ParameterError("draw_weights: empty pool");
  if (!(delta > 0.0)) throw ParameterError("draw_weights: delta must be > 0");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> mu(l);
  for (int attempt = 0; attempt < kMaxWeightDraws; ++attempt) {
    for (double& m : mu) m = normal(rng);
    if (auto alpha = normalize_weights(mu, delta)) return std::move(*alpha);
  }
  throw DegenerateWeightsError("weight sum stayed below delta=" + std::to_string(delta) + " for " +
                               std::to_string(kMaxWeightDraws) + " consecutive draws");
}

struct CombinedSolution {
  FieldSample u;
  std::vector<double> alpha;
};

/// Forms u = sum alpha_i u_i + eps, eps = eta ||u_comb||_inf * mask * g with
/// g a GRF(3, 2) draw scaled to ||g||_inf = 1. Only interior nodes are
/// written, so the boundary trace stays exactly zero.
class SolutionCombiner {
 public:
  explicit SolutionCombiner(const BasisPool& pool)
      : pool_(&pool),
        mask_(boundary_decay_mask(pool.grid)),
        noise_(pool.grid, {3.0, 2.0, 1.0, 0.0, FieldTransform::None}) {
    if (pool.basis.empty()) throw ParameterError("SolutionCombiner: empty pool");
  }

  CombinedSolution combine(RngStream& rng_weights, RngStream& rng_noise, double eta, double delta) const {
    if (!(eta >= 0.0)) throw ParameterError("combine_solution: eta must be >= 0");
    auto alpha = draw_weights(rng_weights, pool_->size(), delta);
    return {combine_with_weights(alpha, rng_noise, eta), std::move(alpha)};
  }

  FieldSample combine_with_weights(std::span<const double> alpha, RngStream& rng_noise, double eta) const {
    const Grid2D& grid = pool_->grid;
    const std::size_t n = grid.n_interior();
    const std::size_t l = pool_->size();
    if (alpha.size() != l) throw DimensionError("combine_with_weights: weight count mismatch");
    FieldSample u(grid);
    std::vector<const double*> src(l);
    for (std::size_t b = 0; b < l; ++b) src[b] = pool_->basis[b].values().data();
    double unorm = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t p = grid.node_of_unknown(i, j);
        double s = 0.0;
        for (std::size_t b = 0; b < l; ++b) s += alpha[b] * src[b][p];
        u.values()[p] = s;
        unorm = std::max(unorm, std::abs(s));
      }
    if (eta > 0.0) {
      const FieldSample g = noise_.sample_raw(rng_noise);
      const double gmax = g.max_abs();
      if (gmax > 0.0) {
        const double amp = eta * unorm / gmax;
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            const std::size_t p = grid.node_of_unknown(i, j);
            u.values()[p] += amp * mask_.values()[p] * g.values()[p];
          }
      }
    }
    return u;
  }

 private:
  const BasisPool* pool_;
  FieldSample mask_;
  GrfSampler noise_;
};

inline FieldSample combine_solution(const BasisPool& pool, RngStream& rng_weights, RngStream& rng_noise, double eta,
                                    double delta) {
  return SolutionCombiner(pool).combine(rng_weights, rng_noise, eta, delta).u;
}

struct GenerationSummary {
  std::size_t requested = 0;
  std::size_t emitted = 0;
  std::vector<std::size_t> skipped;
  std::size_t pool_size = 0;
  double basis_seconds = 0.0;     ///< pool construction wall time
  double action_seconds = 0.0;    ///< sum over samples of combine + operator action
  double solve_seconds = 0.0;     ///< classic path: sum of GMRES solve times
  double sampling_seconds = 0.0;  ///< sum over samples of coefficient draw + assembly
  double total_seconds = 0.0;
  std::vector<double> weight_sums;  ///< filled when config.log_weights
};

namespace detail {

inline constexpr std::size_t kChunk = 256;

struct SampleResult {
  std::optional<SampleTriple> triple;
  double sampling_seconds = 0.0;
  double work_seconds = 0.0;
  double weight_sum = 0.0;
};

/// Computes samples chunk by chunk in parallel and hands them to the sink in
/// index order, so output is independent of the thread count.
template <class Produce, class Sink>
void generate_ordered(std::size_t count, std::size_t threads, Produce&& produce, Sink&& sink,
                      GenerationSummary& summary, bool log_weights) {
  for (std::size_t c0 = 0; c0 < count; c0 += kChunk) {
    const std::size_t c1 = std::min(count, c0 + kChunk);
    std::vector<std::optional<SampleResult>> results(c1 - c0);
    parallel_for(c1 - c0, threads, [&](std::size_t i) { results[i] = produce(c0 + i); });
    for (std::size_t i = 0; i < results.size(); ++i) {
      auto& r = *results[i];
      summary.sampling_seconds += r.sampling_seconds;
      if (r.triple) {
        if (log_weights) summary.weight_sums.push_back(r.weight_sum);
        sink(c0 + i, std::move(*r.triple));
        ++summary.emitted;
      } else {
        summary.skipped.push_back(c0 + i);
      }
    }
  }
}

}  // namespace detail

/// Operator-action pipeline over a prebuilt pool: each sample draws fresh
/// coefficients (SampleParams/k), a combined solution (Weights/k, Noise/k),
/// and sets f = A u on the interior.
template <class Sink>
GenerationSummary generate_from_pool(const GenerationConfig& config, const BasisPool& pool, Sink&& sink) {
  config.validate();
  if (!(pool.grid == config.grid)) throw DimensionError("generate: pool grid does not match config grid");
  const auto t0 = std::chrono::steady_clock::now();
  const PdeSampler sampler(config.pde, config.grid, config.params());
  const SolutionCombiner combiner(pool);
  const double delta = config.weight_delta();
  GenerationSummary s;
  s.requested = config.num_samples;
  s.pool_size = pool.size();
  std::vector<double> action(config.num_samples, 0.0);

  auto produce = [&](std::size_t k) {
    detail::SampleResult r;
    auto ts = std::chrono::steady_clock::now();
    RngStream prng(config.master_seed, StreamRole::SampleParams, k);
    PdeCoefficients coeffs = sampler.draw_coefficients(prng);
    const CsrMatrix A = assemble(coeffs);
    r.sampling_seconds = detail::seconds_since(ts);

    ts = std::chrono::steady_clock::now();
    RngStream wrng(config.master_seed, StreamRole::Weights, k);
    RngStream nrng(config.master_seed, StreamRole::Noise, k);
    auto comb = combiner.combine(wrng, nrng, config.noise_eta, delta);
    const std::vector<double> x = comb.u.interior();
    const std::vector<double> b = apply_operator(A, x);
    r.work_seconds = detail::seconds_since(ts);
    action[k] = r.work_seconds;

    if (config.log_weights)
      for (double a : comb.alpha) r.weight_sum += a;
    FieldSample f(config.grid);
    f.set_interior(b);
    r.triple.emplace(SampleTriple{std::move(coeffs), std::move(f), std::move(comb.u)});
    return r;
  };
  detail::generate_ordered(config.num_samples, config.threads, produce, sink, s, config.log_weights);
  for (double a : action) s.action_seconds += a;
  s.total_seconds = detail::seconds_since(t0);
  return s;
}

template <class Sink>
GenerationSummary generate_diffoas(const GenerationConfig& config, Sink&& sink, const BasisPool* cached = nullptr) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  std::optional<BasisPool> built;
  double basis_seconds = 0.0;
  if (!cached) {
    built = build_basis_pool(config);
    basis_seconds = detail::seconds_since(t0);
    cached = &*built;
  }
  GenerationSummary s = generate_from_pool(config, *cached, sink);
  s.basis_seconds = basis_seconds;
  s.total_seconds = detail::seconds_since(t0);
  return s;
}

template <class Sink>
GenerationSummary generate_ablation(const GenerationConfig& config, AblationBasis kind, Sink&& sink) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const BasisPool pool = build_ablation_pool(config.grid, kind, config.pool_size(), config.master_seed);
  const double basis_seconds = detail::seconds_since(t0);
  GenerationSummary s = generate_from_pool(config, pool, sink);
  s.basis_seconds = basis_seconds;
  s.total_seconds = detail::seconds_since(t0);
  return s;
}

/// Solve-based pipeline: draw coefficients and forcing (SampleParams/k),
/// solve with GMRES at solver_tol. Non-converged samples are skipped.
template <class Sink>
GenerationSummary generate_classic(const GenerationConfig& config, Sink&& sink) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const PdeSampler sampler(config.pde, config.grid, config.params());
  SolveOptions opts;
  opts.tol = config.solver_tol;
  opts.max_iter = config.max_iter;
  GenerationSummary s;
  s.requested = config.num_samples;
  std::vector<double> solve(config.num_samples, 0.0);

  auto produce = [&](std::size_t k) {
    detail::SampleResult r;
    auto ts = std::chrono::steady_clock::now();
    RngStream prng(config.master_seed, StreamRole::SampleParams, k);
    auto d = sampler.draw(prng);
    const CsrMatrix A = assemble(d.coefficients);
    r.sampling_seconds = detail::seconds_since(ts);
    const auto rep = gmres(A, d.forcing.interior(), opts);
    solve[k] = rep.wall_time;
    if (!rep.converged) return r;
    FieldSample f(config.grid);
    f.set_interior(d.forcing.interior());
    FieldSample u(config.grid);
    u.set_interior(rep.x);
    r.triple.emplace(SampleTriple{std::move(d.coefficients), std::move(f), std::move(u)});
    return r;
  };
  detail::generate_ordered(config.num_samples, config.threads, produce, sink, s, false);
  for (double v : solve) s.solve_seconds += v;
  if (s.emitted == 0) throw GenerationError("classic generation: all " + std::to_string(s.requested) +
                                            " samples failed to converge");
  s.total_seconds = detail::seconds_since(t0);
  return s;
}

// ---------------------------------------------------------------------------
// Basis pool cache

/// Identity of a solved pool; pools are reused only on an exact key match.
inline nlohmann::json basis_pool_key(const GenerationConfig& c) {
  return {{"pde", std::string(to_string(c.pde))},
          {"grid_interior", c.grid.n_interior()},
          {"n_basis", c.pool_size()},
          {"solver_tol", c.solver_tol},
          {"master_seed", c.master_seed},
          {"field_params", c.params().to_json(c.pde)}};
}

inline constexpr const char* kPoolData = "basis_pool.f64";
inline constexpr const char* kPoolMeta = "basis_pool.json";

inline void write_basis_pool(const std::filesystem::path& dir, const BasisPool& pool, const nlohmann::json& key) {
  std::filesystem::create_directories(dir);
  Crc32 crc;
  {
    std::ofstream out(dir / kPoolData, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create " + (dir / kPoolData).string());
    std::vector<std::byte> buf;
    for (const auto& u : pool.basis) {
      detail::encode_le(u.values(), buf);
      out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
      crc.update(buf);
    }
    if (!out) throw IoError("write failed: " + (dir / kPoolData).string());
  }
  nlohmann::json prov = nlohmann::json::array();
  for (const auto& p : pool.provenance)
    prov.push_back({{"stream", std::string(to_string(p.role))},
                    {"index", p.stream_index},
                    {"iterations", p.iterations},
                    {"relative_residual", p.relative_residual}});
  const nlohmann::json meta{{"key", key}, {"count", pool.size()}, {"crc32", crc.value()}, {"provenance", prov}};
  detail::write_text_atomically(dir / kPoolMeta, meta.dump(2) + "\n");
}

/// Loads a cached pool if one exists under `dir` with a matching key and
/// intact data; otherwise nullopt.
inline std::optional<BasisPool> load_basis_pool(const std::filesystem::path& dir, const nlohmann::json& key,
                                                const Grid2D& grid) {
  std::ifstream in(dir / kPoolMeta);
  if (!in) return std::nullopt;
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(in);
    if (meta.at("key") != key) return std::nullopt;
    const auto count = meta.at("count").get<std::size_t>();
    const auto path = dir / kPoolData;
    std::error_code ec;
    if (std::filesystem::file_size(path, ec) != count * grid.num_nodes() * 8 || ec) return std::nullopt;
    if (crc32_file(path) != meta.at("crc32").get<std::uint32_t>()) return std::nullopt;
    std::ifstream data(path, std::ios::binary);
    BasisPool pool;
    pool.grid = grid;
    pool.provenance.resize(count);
    std::vector<std::byte> buf(grid.num_nodes() * 8);
    for (std::size_t i = 0; i < count; ++i) {
      data.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
      pool.basis.emplace_back(grid, detail::decode_le(buf));
      const auto& p = meta.at("provenance").at(i);
      pool.provenance[i] = {StreamRole::BasisParams, p.at("index").get<std::size_t>(),
                            p.at("iterations").get<std::size_t>(), p.at("relative_residual").get<double>(), 0.0};
    }
    return pool;
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
}

// ---------------------------------------------------------------------------
// End-to-end: generate into a dataset directory

struct GenerateToDirOptions {
  /// Directory holding a previously saved pool to reuse when its key matches.
  std::optional<std::filesystem::path> reuse_pool_from;
};

struct GenerateToDirResult {
  DatasetManifest manifest;
  GenerationSummary summary;
  bool pool_reused = false;
};

inline GenerateToDirResult generate_dataset(const GenerationConfig& config, const std::filesystem::path& out,
                                            const GenerateToDirOptions& options = {}) {
  config.validate();
  DatasetWriter writer(out, config.pde, config.grid);
  auto sink = [&](std::size_t k, SampleTriple&& t) { writer.append(k, t); };

  GenerateToDirResult res;
  switch (config.method) {
    case GenerationMethod::Classic:
      res.summary = generate_classic(config, sink);
      break;
    case GenerationMethod::DiffOAS: {
      const auto key = basis_pool_key(config);
      std::optional<BasisPool> pool;
      if (options.reuse_pool_from) pool = load_basis_pool(*options.reuse_pool_from, key, config.grid);
      const auto t0 = std::chrono::steady_clock::now();
      double basis_seconds = 0.0;
      if (pool) {
        res.pool_reused = true;
      } else {
        pool = build_basis_pool(config);
        basis_seconds = detail::seconds_since(t0);
      }
      res.summary = generate_from_pool(config, *pool, sink);
      res.summary.basis_seconds = basis_seconds;
      res.summary.total_seconds = detail::seconds_since(t0);
      write_basis_pool(out, *pool, key);
      break;
    }
    case GenerationMethod::AblationGrf:
      res.summary = generate_ablation(config, AblationBasis::GrfField, sink);
      break;
    case GenerationMethod::AblationFourier:
      res.summary = generate_ablation(config, AblationBasis::FourierSine, sink);
      break;
    case GenerationMethod::AblationChebyshev:
      res.summary = generate_ablation(config, AblationBasis::Chebyshev, sink);
      break;
  }

  DatasetManifest seed;
  seed.method = std::string(to_string(config.method));
  auto& g = seed.generation;
  g.master_seed = config.master_seed;
  g.solver_tol = config.solver_tol;
  const bool pooled = config.method != GenerationMethod::Classic;
  g.n_basis = pooled ? res.summary.pool_size : 0;
  g.noise_eta = pooled ? config.noise_eta : 0.0;
  g.delta = pooled ? config.weight_delta() : 0.0;
  g.field_params = config.params().to_json(config.pde);
  g.sign_convention = std::string(sign_convention(config.pde));
  if (pooled) {
    g.timings["basis_seconds"] = res.summary.basis_seconds;
    g.timings["action_seconds"] = res.summary.action_seconds;
  } else {
    g.timings["solve_seconds"] = res.summary.solve_seconds;
  }
  g.timings["sampling_seconds"] = res.summary.sampling_seconds;
  g.timings["total_seconds"] = res.summary.total_seconds;
  seed.skipped_samples = res.summary.skipped;
  if (config.log_weights) seed.debug = {{"weight_sums", res.summary.weight_sums}};
  res.manifest = writer.finish(std::move(seed));
  return res;
}

// ---------------------------------------------------------------------------
// Verification

struct VerificationReport {
  double tol = 0.0;
  double max_residual = 0.0;
  double mean_residual = 0.0;
  std::vector<double> residuals;
  std::vector<std::size_t> failing;
  bool passed() const noexcept { return failing.empty(); }
};

inline constexpr double kResidualFloor = 1e-300;

/// ||A_k u_k - f_k|| / max(||f_k||, floor) on interior nodes.
inline double sample_relative_residual(const SampleTriple& t) {
  const CsrMatrix A = assemble(t.coefficients);
  const auto u = t.solution.interior();
  const auto f = t.forcing.interior();
  const auto Au = apply_operator(A, u);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    num += (Au[i] - f[i]) * (Au[i] - f[i]);
    den += f[i] * f[i];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), kResidualFloor);
}

/// Reassembles every sample's operator from its stored coefficients and
/// checks the relative residual against tol.
inline VerificationReport verify_dataset(const Dataset& ds, double tol) {
  VerificationReport rep;
  rep.tol = tol;
  double sum = 0.0;
  for (std::size_t k = 0; k < ds.size(); ++k) {
    const double r = sample_relative_residual(ds.sample(k));
    rep.residuals.push_back(r);
    rep.max_residual = std::max(rep.max_residual, r);
    sum += r;
    if (!(r <= tol)) rep.failing.push_back(k);
  }
  rep.mean_residual = ds.size() ? sum / static_cast<double>(ds.size()) : 0.0;
  return rep;
}

}  // namespace pdeforge
