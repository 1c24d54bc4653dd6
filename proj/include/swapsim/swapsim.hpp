#pragma once

#include "swapsim/state_algebra.hpp"
#include "swapsim/swap_protocol.hpp"
#include "swapsim/tomography.hpp"
#include "swapsim/serialization.hpp"
#include "swapsim/experiment.hpp"
