// =============================================================================
// bpre.hpp — umbrella include.
// =============================================================================
#pragma once

#include "bpre/common.hpp"
#include "bpre/random.hpp"
#include "bpre/env_model.hpp"
#include "bpre/rates.hpp"
#include "bpre/sim.hpp"
#include "bpre/stats.hpp"
#include "bpre/estimate.hpp"
#include "bpre/verify.hpp"
#include "bpre/cli.hpp"
