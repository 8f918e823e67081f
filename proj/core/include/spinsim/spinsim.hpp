#pragma once

#include "spinsim/constants.hpp"
#include "spinsim/dynamics.hpp"
#include "spinsim/errors.hpp"
#include "spinsim/estimators.hpp"
#include "spinsim/photonstats.hpp"
#include "spinsim/spin_models.hpp"
#include "spinsim/symmetry.hpp"
