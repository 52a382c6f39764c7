// Copyright 2026 The pdeforge Authors
// SPDX-License-Identifier: Apache-2.0

// Library walkthrough: build a small Darcy basis pool, synthesize a few
// samples by operator action, and check their residuals in memory.

#include <cstdio>
#include <vector>

#include "pdeforge/pdeforge.hpp"

int main() {
  pdeforge::GenerationConfig config;
  config.pde = pdeforge::PdeKind::Darcy;
  config.grid = pdeforge::Grid2D(32);
  config.num_samples = 5;
  config.n_basis = 10;
  config.master_seed = 42;

  std::vector<pdeforge::SampleTriple> samples;
  const auto summary = pdeforge::generate_diffoas(
      config, [&](std::size_t, pdeforge::SampleTriple&& t) { samples.push_back(std::move(t)); });

  std::printf("basis %.3f s, action %.6f s\n", summary.basis_seconds, summary.action_seconds);
  for (std::size_t k = 0; k < samples.size(); ++k)
    std::printf("sample %zu: relative residual %.3e, max |u| %.4f\n", k,
                pdeforge::sample_relative_residual(samples[k]), samples[k].solution.max_abs());
  return 0;
}
