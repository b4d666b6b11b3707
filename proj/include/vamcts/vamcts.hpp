#pragma once

// Convenience umbrella: pulls in the whole library.

#include "vamcts/backprop.hpp"
#include "vamcts/bench.hpp"
#include "vamcts/core.hpp"
#include "vamcts/engine.hpp"
#include "vamcts/env.hpp"
#include "vamcts/envs.hpp"
#include "vamcts/learner.hpp"
#include "vamcts/rpo.hpp"
#include "vamcts/selectors.hpp"
#include "vamcts/tree.hpp"
