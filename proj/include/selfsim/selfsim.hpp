#pragma once

#include "selfsim/errors.hpp"
#include "selfsim/parallel.hpp"
#include "selfsim/measure.hpp"
#include "selfsim/fourier.hpp"
#include "selfsim/bounds.hpp"
#include "selfsim/erdos_kahane.hpp"
#include "selfsim/dimensions.hpp"
#include "selfsim/pushforward.hpp"

namespace selfsim {
inline constexpr const char* kVersion = "0.1.0";
}
