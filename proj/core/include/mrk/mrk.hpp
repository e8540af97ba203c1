#pragma once

#include "mrk/integrator.hpp"
#include "mrk/manifold.hpp"
#include "mrk/order_conditions.hpp"
#include "mrk/potentials.hpp"
#include "mrk/quadrature.hpp"
#include "mrk/sampler.hpp"
#include "mrk/tableau.hpp"
#include "mrk/types.hpp"
#include "mrk/version.hpp"
