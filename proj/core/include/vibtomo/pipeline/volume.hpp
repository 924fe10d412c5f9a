#pragma once

#include <filesystem>
#include <string>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "vibtomo/fem/grid.hpp"

namespace vibtomo::pipeline {

/// A scalar field on a voxel grid, stored x-fastest like VoxelGrid indices.
struct VolumeFile {
    fem::VoxelGrid grid{{1, 1, 1}, 1.0};
    std::string name;
    std::string units;
    Eigen::VectorXd values;

    /// Throws ShapeError unless values has nx * ny * nz entries.
    void validate() const;
};

/// {dims, spacing, origin, name, units, values}.
nlohmann::json volume_to_json(const VolumeFile& volume);
VolumeFile volume_from_json(const nlohmann::json& doc);

void write_volume(const VolumeFile& volume, const std::filesystem::path& path);
VolumeFile read_volume(const std::filesystem::path& path);

/// Volume-weighted average of `values` (on `source`) over each voxel of
/// `target`. Target voxels that overlap no source voxel throw ValidationError.
Eigen::VectorXd resample_volume(const Eigen::VectorXd& values, const fem::VoxelGrid& source,
                                const fem::VoxelGrid& target);

}  // namespace vibtomo::pipeline
