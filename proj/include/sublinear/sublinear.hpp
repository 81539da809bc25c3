#pragma once

#include "sublinear/classify.hpp"
#include "sublinear/coeffs.hpp"
#include "sublinear/eigen.hpp"
#include "sublinear/error.hpp"
#include "sublinear/grid.hpp"
#include "sublinear/linalg.hpp"
#include "sublinear/nonlinear.hpp"
#include "sublinear/pool.hpp"
