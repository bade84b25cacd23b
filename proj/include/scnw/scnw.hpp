#pragma once

#include "scnw/analysis.hpp"
#include "scnw/build.hpp"
#include "scnw/circuits.hpp"
#include "scnw/csv.hpp"
#include "scnw/device.hpp"
#include "scnw/elements.hpp"
#include "scnw/error.hpp"
#include "scnw/scenario.hpp"
#include "scnw/solver.hpp"
#include "scnw/svg.hpp"
#include "scnw/sweep.hpp"
