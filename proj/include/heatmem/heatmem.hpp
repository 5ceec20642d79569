#pragma once

/// Umbrella header for the heatmem library: one-dimensional heat conduction
/// with exponential-sum memory kernels, solved by a two-level weighted scheme
/// with localized auxiliary variables, plus independent reference solvers and
/// stability diagnostics.

#include "heatmem/diagnostics.hpp"
#include "heatmem/kernel_fit.hpp"
#include "heatmem/kernels.hpp"
#include "heatmem/memory_system.hpp"
#include "heatmem/oracles.hpp"
#include "heatmem/spatial.hpp"
