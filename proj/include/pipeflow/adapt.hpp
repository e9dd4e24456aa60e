#pragma once

#include "pipeflow/adapt/anet.hpp"
#include "pipeflow/adapt/estimate.hpp"
