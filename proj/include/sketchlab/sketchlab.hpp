#pragma once

#include "sketchlab/advisor.hpp"
#include "sketchlab/csv.hpp"
#include "sketchlab/distortion.hpp"
#include "sketchlab/errors.hpp"
#include "sketchlab/experiment.hpp"
#include "sketchlab/fjlt.hpp"
#include "sketchlab/least_squares.hpp"
#include "sketchlab/prng.hpp"
#include "sketchlab/serialize.hpp"
#include "sketchlab/set_geometry.hpp"
#include "sketchlab/sketch_core.hpp"
