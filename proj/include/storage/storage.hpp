#pragma once

// Umbrella header for the storage-model library.

#include "storage/benchmarks.hpp"
#include "storage/cml_likelihood.hpp"
#include "storage/estimators.hpp"
#include "storage/grid.hpp"
#include "storage/io.hpp"
#include "storage/moments.hpp"
#include "storage/nelder_mead.hpp"
#include "storage/parallel.hpp"
#include "storage/params.hpp"
#include "storage/pf_likelihood.hpp"
#include "storage/price_solver.hpp"
#include "storage/price_table.hpp"
#include "storage/quadrature.hpp"
#include "storage/resampler.hpp"
#include "storage/rng.hpp"
#include "storage/simulate.hpp"
#include "storage/stats.hpp"
#include "storage/transform.hpp"
