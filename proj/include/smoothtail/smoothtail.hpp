#pragma once

#include "distributions.hpp"
#include "errors.hpp"
#include "estimators.hpp"
#include "io.hpp"
#include "logcon.hpp"
#include "rng.hpp"
#include "simulation.hpp"
#include "smoothdist.hpp"
