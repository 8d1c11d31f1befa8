#pragma once

#include "swn/density.hpp"
#include "swn/ensembles.hpp"
#include "swn/experiments.hpp"
#include "swn/rng.hpp"
#include "swn/solvers.hpp"
#include "swn/stats.hpp"
#include "swn/theory.hpp"
#include "swn/version.hpp"
