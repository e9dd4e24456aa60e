#pragma once

#include "pipeflow/solver/physics.hpp"
#include "pipeflow/solver/simulate.hpp"
#include "pipeflow/solver/state.hpp"
#include "pipeflow/solver/system.hpp"
