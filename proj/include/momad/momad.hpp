#pragma once

#include "momad/collision.hpp"
#include "momad/curation.hpp"
#include "momad/error.hpp"
#include "momad/interactor.hpp"
#include "momad/interactor_grad.hpp"
#include "momad/losses.hpp"
#include "momad/matching.hpp"
#include "momad/metrics.hpp"
#include "momad/sim/closed_loop.hpp"
#include "momad/sim/planner.hpp"
#include "momad/sim/proposals.hpp"
#include "momad/sim/scenario.hpp"
#include "momad/trajectory.hpp"
#include "momad/trajectory_set.hpp"
