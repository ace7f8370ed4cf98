#pragma once

#include "cfdim/constants.hpp"
#include "cfdim/ifs.hpp"
#include "cfdim/interval.hpp"
#include "cfdim/matrix.hpp"
#include "cfdim/mesh.hpp"
#include "cfdim/pipeline.hpp"
#include "cfdim/real.hpp"
#include "cfdim/solver.hpp"
