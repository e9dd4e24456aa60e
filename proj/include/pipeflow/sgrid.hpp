#pragma once

#include "pipeflow/sgrid/adapt.hpp"
#include "pipeflow/sgrid/clenshaw_curtis.hpp"
#include "pipeflow/sgrid/interpolant.hpp"
