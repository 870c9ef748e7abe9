#pragma once

// umbrella header

#include "evoproc/config.hpp"
#include "evoproc/contour.hpp"
#include "evoproc/damped_wave.hpp"
#include "evoproc/errors.hpp"
#include "evoproc/expression.hpp"
#include "evoproc/io.hpp"
#include "evoproc/operator_family.hpp"
#include "evoproc/parallel.hpp"
#include "evoproc/process.hpp"
#include "evoproc/product_integration.hpp"
#include "evoproc/rates.hpp"
#include "evoproc/reaction_diffusion.hpp"
#include "evoproc/semigroup.hpp"
#include "evoproc/semilinear.hpp"
#include "evoproc/spaces.hpp"
#include "evoproc/time_grid.hpp"
