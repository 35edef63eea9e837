#pragma once

#include "evcs/bilevel.hpp"
#include "evcs/dam.hpp"
#include "evcs/errors.hpp"
#include "evcs/fleet.hpp"
#include "evcs/lp.hpp"
#include "evcs/model.hpp"
#include "evcs/report.hpp"
#include "evcs/scenario_json.hpp"
#include "evcs/scenarios.hpp"
