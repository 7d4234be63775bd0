#pragma once

#include "lifeadd/analytic.hpp"
#include "lifeadd/commands.hpp"
#include "lifeadd/contention.hpp"
#include "lifeadd/des.hpp"
#include "lifeadd/energy.hpp"
#include "lifeadd/error.hpp"
#include "lifeadd/report.hpp"
#include "lifeadd/scenario.hpp"
#include "lifeadd/scenarios.hpp"
#include "lifeadd/solver.hpp"
#include "lifeadd/topology.hpp"
#include "lifeadd/validation.hpp"
