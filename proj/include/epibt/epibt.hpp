#pragma once

#include "distance.hpp"
#include "generators.hpp"
#include "grid.hpp"
#include "lns.hpp"
#include "operations.hpp"
#include "planner.hpp"
#include "report.hpp"
#include "reservation.hpp"
#include "scenario.hpp"
#include "simulation.hpp"
