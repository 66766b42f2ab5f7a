#pragma once

#include "fracinv/error.hpp"
#include "fracinv/field.hpp"
#include "fracinv/forward.hpp"
#include "fracinv/fractional.hpp"
#include "fracinv/inverse.hpp"
#include "fracinv/mlf.hpp"
#include "fracinv/oracle.hpp"
#include "fracinv/parallel.hpp"
#include "fracinv/quadrature.hpp"
#include "fracinv/spectral.hpp"
#include "fracinv/time_series.hpp"
#include "fracinv/verify.hpp"
