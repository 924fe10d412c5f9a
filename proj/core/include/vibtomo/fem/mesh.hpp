#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "vibtomo/fem/grid.hpp"

namespace vibtomo::fem {

enum class ElementKind {
    SolidHex8,    ///< trilinear hexahedron, 3 displacement DOFs per vertex
    MembraneTri3  ///< linear triangle, 1 transverse DOF per vertex
};

std::string to_string(ElementKind kind);
ElementKind element_kind_from_string(const std::string& s);

enum class CubeFace { None, Bottom, Top, Front, Back, Left, Right };

CubeFace cube_face_from_string(const std::string& s);
std::string to_string(CubeFace face);

/// Immutable finite element mesh with a voxel assignment per element and a
/// Dirichlet vertex set. Free DOFs are numbered vertex-major, skipping fixed
/// vertices: dof(v, c) = dof_per_vertex * rank_of_v_among_free + c.
class Mesh {
public:
    Mesh(ElementKind kind, VoxelGrid grid, std::vector<Eigen::Vector3d> vertices,
         std::vector<int> connectivity, std::vector<int> fixed_vertices,
         std::vector<int> voxel_of_element, bool structured = false);

    ElementKind kind() const { return kind_; }
    const VoxelGrid& grid() const { return grid_; }
    bool structured() const { return structured_; }

    int dof_per_vertex() const { return kind_ == ElementKind::SolidHex8 ? 3 : 1; }
    int nodes_per_element() const { return kind_ == ElementKind::SolidHex8 ? 8 : 3; }

    int vertex_count() const { return static_cast<int>(vertices_.size()); }
    int element_count() const {
        return static_cast<int>(connectivity_.size()) / nodes_per_element();
    }

    const std::vector<Eigen::Vector3d>& vertices() const { return vertices_; }
    const Eigen::Vector3d& vertex(int i) const { return vertices_[i]; }
    std::span<const int> element(int e) const {
        return {connectivity_.data() + static_cast<std::size_t>(e) * nodes_per_element(),
                static_cast<std::size_t>(nodes_per_element())};
    }
    const std::vector<int>& connectivity() const { return connectivity_; }
    const std::vector<int>& fixed_vertices() const { return fixed_vertices_; }
    const std::vector<int>& voxel_of_element() const { return voxel_of_element_; }

    bool is_fixed(int vertex) const { return free_rank_[vertex] < 0; }

    /// Free DOF count n.
    int free_dof_count() const { return free_vertex_count_ * dof_per_vertex(); }
    int total_dof_count() const { return vertex_count() * dof_per_vertex(); }

    /// Global free DOF index of component c of vertex v, or -1 when v is fixed.
    int dof(int vertex, int component) const {
        int r = free_rank_[vertex];
        return r < 0 ? -1 : r * dof_per_vertex() + component;
    }

    /// Vertex (x, y, z lattice) index for structured meshes.
    std::optional<int> lattice_vertex(int ix, int iy, int iz) const;

    /// Expands a free-DOF vector into a per-vertex 3D displacement field
    /// (3 * vertex_count entries). Membrane DOFs map to the z component.
    Eigen::VectorXd expand_to_vertices(const Eigen::Ref<const Eigen::VectorXd>& free) const;

private:
    ElementKind kind_;
    VoxelGrid grid_;
    std::vector<Eigen::Vector3d> vertices_;
    std::vector<int> connectivity_;
    std::vector<int> fixed_vertices_;
    std::vector<int> voxel_of_element_;
    bool structured_;
    std::vector<int> free_rank_;
    int free_vertex_count_ = 0;
};

/// One hex8 element per voxel; (nx+1)(ny+1)(nz+1) lattice vertices.
Mesh build_cube_mesh(const VoxelGrid& grid, CubeFace fixed_face = CubeFace::None);

/// Structured triangulation of an (nx, ny, 1) grid in the z = origin.z plane,
/// two triangles per cell. With boundary_fixed every perimeter vertex is clamped.
Mesh build_membrane_mesh(const VoxelGrid& grid, bool boundary_fixed);

/// Assigns each element of an arbitrary mesh to the voxel nearest its centroid.
std::vector<int> nearest_voxel_assignment(const VoxelGrid& grid,
                                          const std::vector<Eigen::Vector3d>& vertices,
                                          const std::vector<int>& connectivity,
                                          int nodes_per_element);

}  // namespace vibtomo::fem
