#pragma once

#include "simplex.hpp"
#include "ba_core.hpp"
#include "ode.hpp"
#include "flow.hpp"
#include "spectral.hpp"
#include "gaussian.hpp"
#include "models.hpp"
#include "extensions.hpp"
#include "io.hpp"

namespace baflow {

inline constexpr const char* kVersion = "1.0.0";

} // namespace baflow
