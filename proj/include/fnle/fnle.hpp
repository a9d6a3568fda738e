#pragma once

#include "fnle/cone.hpp"
#include "fnle/diagnostics.hpp"
#include "fnle/eigen_system.hpp"
#include "fnle/errors.hpp"
#include "fnle/field_io.hpp"
#include "fnle/gmres.hpp"
#include "fnle/grid.hpp"
#include "fnle/level_set.hpp"
#include "fnle/matrix_calculus.hpp"
#include "fnle/operator.hpp"
#include "fnle/random.hpp"
#include "fnle/solver.hpp"
#include "fnle/subsolution.hpp"
#include "fnle/symmetric.hpp"
#include "fnle/torus.hpp"
