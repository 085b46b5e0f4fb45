#pragma once

#include "spincal/angles.hpp"
#include "spincal/dh.hpp"
#include "spincal/env.hpp"
#include "spincal/harness.hpp"
#include "spincal/io.hpp"
#include "spincal/optimizer.hpp"
#include "spincal/scan.hpp"
#include "spincal/sim.hpp"
#include "spincal/uncertainty.hpp"
#include "spincal/voxel.hpp"
