#pragma once

#include "pipeflow/post/kde.hpp"
#include "pipeflow/post/surrogate.hpp"
