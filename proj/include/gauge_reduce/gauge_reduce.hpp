#pragma once

#include "gauge_reduce/errors.hpp"
#include "gauge_reduce/lattice.hpp"
#include "gauge_reduce/gauge.hpp"
#include "gauge_reduce/orbit_geometry.hpp"
#include "gauge_reduce/rng.hpp"
#include "gauge_reduce/stochastic.hpp"
#include "gauge_reduce/kolmogorov.hpp"
