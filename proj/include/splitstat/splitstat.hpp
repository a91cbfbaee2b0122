#pragma once

#include "splitstat/error.hpp"
#include "splitstat/random.hpp"
#include "splitstat/core.hpp"
#include "splitstat/symstat.hpp"
#include "splitstat/bootstrap_result.hpp"
#include "splitstat/variance.hpp"
#include "splitstat/resample.hpp"
#include "splitstat/dcov.hpp"
#include "splitstat/planner.hpp"
