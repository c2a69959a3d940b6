#pragma once

#include "numerics.hpp"
#include "random.hpp"
#include "distributions.hpp"
#include "orthopoly.hpp"
#include "kernels.hpp"
#include "chains.hpp"
#include "spectra.hpp"
#include "convergence.hpp"
#include "verify.hpp"

namespace orthomix {
inline constexpr const char* kVersion = "0.1.0";
}
