#pragma once

#include "ietlab/angle_map.hpp"
#include "ietlab/circle.hpp"
#include "ietlab/commands.hpp"
#include "ietlab/config.hpp"
#include "ietlab/error.hpp"
#include "ietlab/iet.hpp"
#include "ietlab/parallel.hpp"
#include "ietlab/planar.hpp"
#include "ietlab/policy.hpp"
#include "ietlab/random.hpp"
#include "ietlab/simulation.hpp"
#include "ietlab/trigger.hpp"
