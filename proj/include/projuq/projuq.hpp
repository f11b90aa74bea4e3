#pragma once

#include "projuq/assessment.hpp"
#include "projuq/basis.hpp"
#include "projuq/calibration.hpp"
#include "projuq/cg.hpp"
#include "projuq/covariance.hpp"
#include "projuq/csv.hpp"
#include "projuq/decomp.hpp"
#include "projuq/distributions.hpp"
#include "projuq/ensemble.hpp"
#include "projuq/errors.hpp"
#include "projuq/matrix.hpp"
#include "projuq/parallel.hpp"
#include "projuq/problems.hpp"
#include "projuq/projection.hpp"
#include "projuq/rng.hpp"
#include "projuq/special.hpp"
#include "projuq/vec.hpp"
