#pragma once

#include "pipeflow/netmodel/io.hpp"
#include "pipeflow/netmodel/schedule.hpp"
#include "pipeflow/netmodel/types.hpp"
#include "pipeflow/netmodel/validate.hpp"
