#pragma once

#include "adcps/system.hpp"

namespace adcps {

// Discretized inverted pendulum on a cart (10 ms sampling), fully
// instrumented (C = I). The feedback gain is left empty; callers design
// one, typically via lqr_gain.
SystemModel inverted_pendulum_cart();

}  // namespace adcps
