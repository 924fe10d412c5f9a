#include "vibtomo/fem/grid.hpp"

#include <algorithm>
#include <cmath>

#include "vibtomo/error.hpp"

namespace vibtomo::fem {

VoxelGrid::VoxelGrid(std::array<int, 3> dims, double spacing, Eigen::Vector3d origin)
    : dims_(dims), spacing_(spacing), origin_(std::move(origin)) {
    for (int d : dims_) {
        if (d < 1) throw ValidationError("voxel grid dims must all be >= 1");
    }
    if (!(spacing_ > 0.0) || !std::isfinite(spacing_)) {
        throw ValidationError("voxel grid spacing must be positive");
    }
}

std::array<int, 3> VoxelGrid::coords(int index) const {
    const int ix = index % dims_[0];
    const int rest = index / dims_[0];
    return {ix, rest % dims_[1], rest / dims_[1]};
}

Eigen::Vector3d VoxelGrid::center(int index) const {
    auto c = coords(index);
    return origin_ + spacing_ * Eigen::Vector3d(c[0] + 0.5, c[1] + 0.5, c[2] + 0.5);
}

int VoxelGrid::nearest_voxel(const Eigen::Vector3d& p) const {
    std::array<int, 3> c{};
    for (int a = 0; a < 3; ++a) {
        int i = static_cast<int>(std::floor((p[a] - origin_[a]) / spacing_));
        c[a] = std::clamp(i, 0, dims_[a] - 1);
    }
    return index(c[0], c[1], c[2]);
}

Eigen::Vector3d VoxelGrid::extent() const {
    return spacing_ * Eigen::Vector3d(dims_[0], dims_[1], dims_[2]);
}

}  // namespace vibtomo::fem
