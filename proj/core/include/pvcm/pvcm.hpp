#pragma once

#include "pvcm/array_io.hpp"
#include "pvcm/dictionary.hpp"
#include "pvcm/error.hpp"
#include "pvcm/grid.hpp"
#include "pvcm/image.hpp"
#include "pvcm/metrics.hpp"
#include "pvcm/parallel.hpp"
#include "pvcm/phantom.hpp"
#include "pvcm/solvers.hpp"
#include "pvcm/spatial.hpp"
#include "pvcm/version.hpp"
