#pragma once

// Umbrella header for the fairaudit library.

#include "fairaudit/csv.hpp"
#include "fairaudit/dataset.hpp"
#include "fairaudit/errors.hpp"
#include "fairaudit/harness.hpp"
#include "fairaudit/metrics.hpp"
#include "fairaudit/recipe.hpp"
#include "fairaudit/report.hpp"
#include "fairaudit/split.hpp"
#include "fairaudit/stats.hpp"
#include "fairaudit/trainer.hpp"
#include "fairaudit/version.hpp"
