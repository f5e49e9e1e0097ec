#pragma once

#include "mfopt/error.hpp"
#include "mfopt/polynomial.hpp"
#include "mfopt/problem.hpp"
#include "mfopt/meanfield.hpp"
#include "mfopt/solver.hpp"
#include "mfopt/oracle.hpp"
#include "mfopt/instances.hpp"
#include "mfopt/bench.hpp"
