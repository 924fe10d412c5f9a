#pragma once

#include <optional>
#include <vector>

#include "vibtomo/fem/assembly.hpp"
#include "vibtomo/fem/mesh.hpp"
#include "vibtomo/observation/projection.hpp"

namespace vibtomo::obs {

/// P maps free-DOF displacement to stacked per-vertex pixel displacement
/// (dx_0, dy_0, dx_1, dy_1, ...) over all q mesh vertices. Rows of unseen
/// vertices are empty; fixed vertices contribute no columns.
struct SamplingOperator {
    fem::SparseMatrix P;
    std::vector<int> visible_vertices;  // ascending
    int q = 0;

    int rows() const { return 2 * q; }
    /// 1 for rows 2i, 2i+1 of visible vertices, 0 otherwise.
    Eigen::VectorXd visible_row_mask() const;
    int nonzero_rows() const;
};

/// Vertices on the bounding-box faces that face the camera (outward normal .
/// view direction < 0). For membranes every vertex is visible.
std::vector<int> auto_visible_vertices(const fem::Mesh& mesh, const ProjectionModel& camera);

/// Throws ValidationError for an empty or out-of-range visible set.
SamplingOperator build_sampling_operator(const fem::Mesh& mesh, const ProjectionModel& camera,
                                         std::optional<std::vector<int>> visible = std::nullopt);

/// Like P, but the displacement lives on a different structured `source` mesh
/// and is interpolated (trilinear for hex8, barycentric for tri3) to the
/// target vertex positions before projection. Rows follow the target mesh;
/// columns are source free DOFs. Used to observe a forward model through an
/// inference mesh of another resolution.
fem::SparseMatrix build_transfer_operator(const fem::Mesh& source, const fem::Mesh& target,
                                          const ProjectionModel& camera,
                                          const std::vector<int>& target_visible);

}  // namespace vibtomo::obs
