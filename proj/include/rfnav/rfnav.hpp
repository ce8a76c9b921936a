// Umbrella header.
#pragma once

#include "rfnav/core.hpp"
#include "rfnav/rfsim.hpp"
#include "rfnav/aoa.hpp"
#include "rfnav/apf.hpp"
#include "rfnav/optimizer.hpp"
#include "rfnav/world.hpp"
#include "rfnav/experiments.hpp"
#include "rfnav/io.hpp"
