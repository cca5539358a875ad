#pragma once

#include "sscls/error.hpp"
#include "sscls/linalg.hpp"
#include "sscls/model.hpp"
#include "sscls/constraint_map.hpp"
#include "sscls/simulator.hpp"
#include "sscls/estimators.hpp"
#include "sscls/scenarios.hpp"
#include "sscls/harness.hpp"
