#pragma once

#include "pipeflow/uq/campaign.hpp"
#include "pipeflow/uq/rates.hpp"
#include "pipeflow/uq/sampler.hpp"
#include "pipeflow/uq/schedule.hpp"
