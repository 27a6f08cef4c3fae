#pragma once

#include "gridopt/ac_evaluation.hpp"
#include "gridopt/dcopf.hpp"
#include "gridopt/dispatch.hpp"
#include "gridopt/lp.hpp"
#include "gridopt/matrix.hpp"
#include "gridopt/network.hpp"
#include "gridopt/result.hpp"
#include "gridopt/system_matrices.hpp"
#include "gridopt/version.hpp"
