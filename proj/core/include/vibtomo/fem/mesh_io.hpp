#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "vibtomo/fem/mesh.hpp"

namespace vibtomo::fem {

/// Mesh document: {dims, spacing, origin, kind, fixed_vertices, vertices?, elements?,
/// voxel_of_element?}. Structured meshes omit vertices/elements and are
/// regenerated from the grid on load.
nlohmann::json mesh_to_json(const Mesh& mesh);
Mesh mesh_from_json(const nlohmann::json& doc);

void write_mesh(const Mesh& mesh, const std::filesystem::path& path);
Mesh read_mesh(const std::filesystem::path& path);

nlohmann::json grid_to_json(const VoxelGrid& grid);
VoxelGrid grid_from_json(const nlohmann::json& doc);

}  // namespace vibtomo::fem
