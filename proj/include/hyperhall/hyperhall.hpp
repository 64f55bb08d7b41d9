#pragma once

#include "adiabatic.hpp"
#include "errors.hpp"
#include "fuchsian.hpp"
#include "hypgeom.hpp"
#include "jacobi.hpp"
#include "linalg.hpp"
#include "spectral.hpp"
#include "twisted_algebra.hpp"
