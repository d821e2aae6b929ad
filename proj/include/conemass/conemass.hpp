#pragma once

#include "conemass/asymptotics.hpp"
#include "conemass/conformal.hpp"
#include "conemass/error.hpp"
#include "conemass/experiment.hpp"
#include "conemass/geometry.hpp"
#include "conemass/io.hpp"
#include "conemass/mass.hpp"
#include "conemass/numerics.hpp"
#include "conemass/radial_function.hpp"
#include "conemass/radial_solver.hpp"
#include "conemass/spectral.hpp"
