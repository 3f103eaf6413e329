#pragma once

// Umbrella header for the library part (everything except the CLI).

#include "slsm/distribution.hpp"
#include "slsm/error.hpp"
#include "slsm/experiment.hpp"
#include "slsm/hausdorff.hpp"
#include "slsm/io.hpp"
#include "slsm/lsq.hpp"
#include "slsm/random.hpp"
#include "slsm/stretched_lsm.hpp"
