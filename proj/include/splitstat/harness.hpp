#pragma once

#include "splitstat/splitstat.hpp"
#include "splitstat/harness/csv.hpp"
#include "splitstat/harness/distributions.hpp"
#include "splitstat/harness/experiments.hpp"
#include "splitstat/harness/report.hpp"
