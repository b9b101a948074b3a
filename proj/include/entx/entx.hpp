#pragma once

// Umbrella header: the whole library.

#include "entx/errors.hpp"
#include "entx/matrix.hpp"
#include "entx/state.hpp"
#include "entx/random.hpp"
#include "entx/montecarlo.hpp"
#include "entx/dilation.hpp"
#include "entx/deterministic.hpp"
#include "entx/multicopy.hpp"
#include "entx/stateio.hpp"
#include "entx/verify.hpp"
