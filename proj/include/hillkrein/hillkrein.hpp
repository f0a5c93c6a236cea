#pragma once

#include "boundary.hpp"
#include "coeff_path.hpp"
#include "eigensolver.hpp"
#include "error.hpp"
#include "fredholm.hpp"
#include "hill.hpp"
#include "krein2.hpp"
#include "propagator.hpp"
#include "trace.hpp"
#include "problem.hpp"
#include "cli.hpp"
