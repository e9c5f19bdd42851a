// dimerlab.hpp: umbrella header

#pragma once

#include "dimerlab/errors.hpp"
#include "dimerlab/linalg.hpp"
#include "dimerlab/qdyn.hpp"
#include "dimerlab/circuit.hpp"
#include "dimerlab/ode.hpp"
#include "dimerlab/heom.hpp"
#include "dimerlab/ttm.hpp"
#include "dimerlab/optimize.hpp"
#include "dimerlab/postproc.hpp"
#include "dimerlab/calib.hpp"
