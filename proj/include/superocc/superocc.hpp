#pragma once

// Umbrella header for the whole library.

#include "superocc/bounds.hpp"
#include "superocc/config.hpp"
#include "superocc/core.hpp"
#include "superocc/environment.hpp"
#include "superocc/experiments.hpp"
#include "superocc/io.hpp"
#include "superocc/kernels.hpp"
#include "superocc/occupation.hpp"
#include "superocc/oracles.hpp"
#include "superocc/parallel.hpp"
#include "superocc/particle_system.hpp"
#include "superocc/quadrature.hpp"
#include "superocc/random.hpp"
#include "superocc/regularity.hpp"
#include "superocc/special.hpp"

namespace superocc {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace superocc
