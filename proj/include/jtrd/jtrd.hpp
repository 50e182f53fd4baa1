#pragma once

// Umbrella header for the whole library.

#include "jtrd/analysis.hpp"
#include "jtrd/channel.hpp"
#include "jtrd/config.hpp"
#include "jtrd/core.hpp"
#include "jtrd/detectors.hpp"
#include "jtrd/harness.hpp"
#include "jtrd/linalg.hpp"
#include "jtrd/receiver.hpp"
#include "jtrd/rng.hpp"
#include "jtrd/trainer.hpp"
#include "jtrd/transmitter.hpp"
