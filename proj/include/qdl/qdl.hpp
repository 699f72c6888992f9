#pragma once

// Umbrella header for the whole library.

#include "qdl/backprop.hpp"
#include "qdl/circuit.hpp"
#include "qdl/config.hpp"
#include "qdl/io.hpp"
#include "qdl/qcore.hpp"
#include "qdl/rl.hpp"
#include "qdl/schedules.hpp"
#include "qdl/staging.hpp"
#include "qdl/training.hpp"
#include "qdl/witness.hpp"
