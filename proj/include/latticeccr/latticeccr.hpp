#pragma once

#include "latticeccr/errors.hpp"
#include "latticeccr/types.hpp"
#include "latticeccr/operators.hpp"
#include "latticeccr/series.hpp"
#include "latticeccr/ccr.hpp"
#include "latticeccr/spectral.hpp"
#include "latticeccr/dynamics.hpp"
