#pragma once

#include <array>
#include <cstddef>

#include <Eigen/Core>

namespace vibtomo::fem {

/// Regular voxel grid. Voxels are indexed x-fastest:
/// index = ix + nx * (iy + ny * iz).
class VoxelGrid {
public:
    VoxelGrid(std::array<int, 3> dims, double spacing,
              Eigen::Vector3d origin = Eigen::Vector3d::Zero());

    const std::array<int, 3>& dims() const { return dims_; }
    int nx() const { return dims_[0]; }
    int ny() const { return dims_[1]; }
    int nz() const { return dims_[2]; }
    double spacing() const { return spacing_; }
    const Eigen::Vector3d& origin() const { return origin_; }

    /// Voxel count m.
    int size() const { return dims_[0] * dims_[1] * dims_[2]; }

    int index(int ix, int iy, int iz) const { return ix + dims_[0] * (iy + dims_[1] * iz); }
    std::array<int, 3> coords(int index) const;

    Eigen::Vector3d center(int index) const;

    /// Voxel containing p, clamped to the grid (nearest voxel for outside points).
    int nearest_voxel(const Eigen::Vector3d& p) const;

    /// Physical extent along each axis.
    Eigen::Vector3d extent() const;

    bool operator==(const VoxelGrid&) const = default;

private:
    std::array<int, 3> dims_;
    double spacing_;
    Eigen::Vector3d origin_;
};

}  // namespace vibtomo::fem
