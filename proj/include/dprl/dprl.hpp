#pragma once

#include "dprl/binary_mechanism.hpp"
#include "dprl/count_tables.hpp"
#include "dprl/env_json.hpp"
#include "dprl/harness.hpp"
#include "dprl/planner.hpp"
#include "dprl/planning.hpp"
#include "dprl/privatizer.hpp"
#include "dprl/projection.hpp"
#include "dprl/riverswim.hpp"
#include "dprl/rng.hpp"
#include "dprl/tabular_mdp.hpp"
