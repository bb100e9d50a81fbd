#pragma once

// Umbrella header.

#include "lattigauss/bounds.hpp"
#include "lattigauss/gf.hpp"
#include "lattigauss/lattice.hpp"
#include "lattigauss/numeric.hpp"
#include "lattigauss/params.hpp"
#include "lattigauss/rng.hpp"
#include "lattigauss/simulate.hpp"
#include "lattigauss/theta.hpp"
