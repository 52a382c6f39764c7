// Copyright 2026 The pdeforge Authors
// SPDX-License-Identifier: Apache-2.0

// Umbrella header for the library (the CLI lives in pdeforge/cli.hpp).
#pragma once

#include "pdeforge/bench.hpp"
#include "pdeforge/crc32.hpp"
#include "pdeforge/csr.hpp"
#include "pdeforge/dataset_io.hpp"
#include "pdeforge/dense.hpp"
#include "pdeforge/error.hpp"
#include "pdeforge/fields.hpp"
#include "pdeforge/generator.hpp"
#include "pdeforge/grid.hpp"
#include "pdeforge/operators.hpp"
#include "pdeforge/rng.hpp"
#include "pdeforge/solvers/cg.hpp"
#include "pdeforge/solvers/gmres.hpp"
#include "pdeforge/solvers/report.hpp"
