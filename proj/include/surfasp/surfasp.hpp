#pragma once

#include "surfasp/assembly.hpp"
#include "surfasp/geometry.hpp"
#include "surfasp/harness.hpp"
#include "surfasp/krylov.hpp"
#include "surfasp/linalg.hpp"
#include "surfasp/mesh.hpp"
#include "surfasp/precond.hpp"
#include "surfasp/quadrature.hpp"
#include "surfasp/transfer.hpp"
#include "surfasp/vec.hpp"
