#pragma once

#include "vchr/config.hpp"
#include "vchr/diagnostics.hpp"
#include "vchr/errors.hpp"
#include "vchr/experiments.hpp"
#include "vchr/grid.hpp"
#include "vchr/initial_conditions.hpp"
#include "vchr/potential.hpp"
#include "vchr/run.hpp"
#include "vchr/snapshot.hpp"
#include "vchr/spd_operator.hpp"
#include "vchr/spectral.hpp"
#include "vchr/stepper.hpp"
