#pragma once

#include "vibtomo/fem/assembly.hpp"
#include "vibtomo/fem/grid.hpp"

namespace vibtomo::inv {

/// Second-difference Laplacian over the voxel grid (6-neighbour in 3D; axes
/// of extent 1 are skipped, giving the 4-neighbour stencil for membranes).
/// Boundaries mirror the edge voxel, so a boundary row along an axis reads
/// [-1, 1]. Symmetric with zero row sums.
fem::SparseMatrix build_laplacian(const fem::VoxelGrid& grid);

}  // namespace vibtomo::inv
