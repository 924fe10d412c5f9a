#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "vibtomo/fem/grid.hpp"

namespace vibtomo::pipeline {

enum class Colormap {
    Gray,
    /// Piecewise-linear through black (0,0,4), purple (87,16,110),
    /// red (188,55,84), orange (249,142,9), pale yellow (252,255,164) at
    /// t = 0, 0.25, 0.5, 0.75, 1.
    Heat,
};

Colormap colormap_from_string(const std::string& s);

/// RGB for t in [0, 1] (clamped).
std::array<std::uint8_t, 3> colormap_rgb(Colormap map, double t);

/// Writes an 8-bit RGB PNG of a row-major height x width image. Values are
/// mapped linearly from [lo, hi] to the colormap; each sample becomes a
/// scale x scale block.
void write_heatmap_png(const std::filesystem::path& path, const Eigen::MatrixXd& image, double lo, double hi,
                       Colormap map, int scale = 16);

/// One PNG per z slice, named <prefix>_z<k>.png, image row = y flipped so +y
/// points up. Returns the written paths.
std::vector<std::filesystem::path> write_slice_heatmaps(const std::filesystem::path& prefix,
                                                        const Eigen::VectorXd& field, const fem::VoxelGrid& grid,
                                                        double lo, double hi, Colormap map, int scale = 16);

}  // namespace vibtomo::pipeline
