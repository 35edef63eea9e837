#pragma once

#include "evcs/lp/duality.hpp"
#include "evcs/lp/lp_format.hpp"
#include "evcs/lp/program.hpp"
#include "evcs/lp/simplex.hpp"
