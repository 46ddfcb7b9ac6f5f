#pragma once

// Umbrella header for the whole library.

#include "reactive/types.hpp"
#include "reactive/frame.hpp"
#include "reactive/scenario.hpp"
#include "reactive/mappings.hpp"
#include "reactive/rng.hpp"
#include "reactive/turbine.hpp"
#include "reactive/detector.hpp"
#include "reactive/json_io.hpp"
#include "reactive/dataset_io.hpp"
#include "reactive/experiment.hpp"
