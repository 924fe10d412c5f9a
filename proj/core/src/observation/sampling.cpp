#include "vibtomo/observation/sampling.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "vibtomo/error.hpp"

namespace vibtomo::obs {
namespace {

using fem::ElementKind;
using fem::Mesh;
using Triplet = Eigen::Triplet<double>;

// Pixel response of a unit displacement of `component` (0..2) at a vertex.
Eigen::Vector2d column_of(const ProjectionModel& cam, const Mesh& mesh, int component) {
    if (mesh.kind() == ElementKind::MembraneTri3) return cam.A.col(2);
    return cam.A.col(component);
}

void validate_visible(const Mesh& mesh, const std::vector<int>& visible) {
    if (visible.empty()) throw ValidationError("visible vertex set is empty");
    for (int v : visible)
        if (v < 0 || v >= mesh.vertex_count())
            throw ValidationError("visible vertex index out of range");
}

struct Weight {
    int vertex;
    double value;
};

// Interpolation weights of a point inside a structured source mesh.
std::vector<Weight> interpolation_weights(const Mesh& src, const Eigen::Vector3d& p) {
    const auto& g = src.grid();
    std::array<int, 3> cell{};
    std::array<double, 3> t{};
    const int axes = src.kind() == ElementKind::SolidHex8 ? 3 : 2;
    for (int a = 0; a < axes; ++a) {
        const double x = (p[a] - g.origin()[a]) / g.spacing();
        cell[a] = std::clamp(static_cast<int>(std::floor(x)), 0, g.dims()[a] - 1);
        t[a] = std::clamp(x - cell[a], 0.0, 1.0);
    }
    std::vector<Weight> out;
    if (src.kind() == ElementKind::SolidHex8) {
        for (int dz = 0; dz < 2; ++dz)
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx) {
                    const double w = (dx ? t[0] : 1.0 - t[0]) * (dy ? t[1] : 1.0 - t[1]) *
                                     (dz ? t[2] : 1.0 - t[2]);
                    if (w == 0.0) continue;
                    out.push_back({*src.lattice_vertex(cell[0] + dx, cell[1] + dy, cell[2] + dz), w});
                }
    } else {
        const double s = t[0], r = t[1];
        auto v = [&](int dx, int dy) { return *src.lattice_vertex(cell[0] + dx, cell[1] + dy, 0); };
        // Cells split along the (0,0)-(1,1) diagonal, matching build_membrane_mesh.
        const std::array<Weight, 3> tri =
            r <= s ? std::array<Weight, 3>{{{v(0, 0), 1.0 - s}, {v(1, 0), s - r}, {v(1, 1), r}}}
                   : std::array<Weight, 3>{{{v(0, 0), 1.0 - r}, {v(1, 1), s}, {v(0, 1), r - s}}};
        for (const auto& w : tri)
            if (w.value != 0.0) out.push_back(w);
    }
    return out;
}

}  // namespace

Eigen::VectorXd SamplingOperator::visible_row_mask() const {
    Eigen::VectorXd mask = Eigen::VectorXd::Zero(rows());
    for (int v : visible_vertices) mask.segment<2>(2 * v).setOnes();
    return mask;
}

int SamplingOperator::nonzero_rows() const {
    std::vector<char> seen(P.rows(), 0);
    for (int k = 0; k < P.outerSize(); ++k)
        for (fem::SparseMatrix::InnerIterator it(P, k); it; ++it)
            if (it.value() != 0.0) seen[it.row()] = 1;
    return static_cast<int>(std::count(seen.begin(), seen.end(), 1));
}

std::vector<int> auto_visible_vertices(const Mesh& mesh, const ProjectionModel& camera) {
    std::vector<int> out;
    if (mesh.kind() == ElementKind::MembraneTri3) {
        out.resize(mesh.vertex_count());
        for (int i = 0; i < mesh.vertex_count(); ++i) out[i] = i;
        return out;
    }
    Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
    Eigen::Vector3d hi = -lo;
    for (const auto& p : mesh.vertices()) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const double tol = 1e-9 * (hi - lo).maxCoeff();
    const Eigen::Vector3d view = camera.view_direction();
    for (int i = 0; i < mesh.vertex_count(); ++i) {
        const auto& p = mesh.vertex(i);
        bool visible = false;
        for (int a = 0; a < 3 && !visible; ++a) {
            // Face with outward normal -e_a at lo, +e_a at hi.
            if (std::abs(p[a] - lo[a]) <= tol && -view[a] < -1e-12) visible = true;
            if (std::abs(p[a] - hi[a]) <= tol && view[a] < -1e-12) visible = true;
        }
        if (visible) out.push_back(i);
    }
    return out;
}

SamplingOperator build_sampling_operator(const Mesh& mesh, const ProjectionModel& camera,
                                         std::optional<std::vector<int>> visible) {
    std::vector<int> vis = visible ? std::move(*visible) : auto_visible_vertices(mesh, camera);
    std::sort(vis.begin(), vis.end());
    vis.erase(std::unique(vis.begin(), vis.end()), vis.end());
    validate_visible(mesh, vis);

    const int dpv = mesh.dof_per_vertex();
    std::vector<Triplet> trips;
    trips.reserve(vis.size() * 2 * dpv);
    for (int v : vis) {
        for (int c = 0; c < dpv; ++c) {
            const int col = mesh.dof(v, c);
            if (col < 0) continue;
            const Eigen::Vector2d a = column_of(camera, mesh, c);
            trips.emplace_back(2 * v, col, a[0]);
            trips.emplace_back(2 * v + 1, col, a[1]);
        }
    }
    SamplingOperator op;
    op.q = mesh.vertex_count();
    op.P.resize(2 * op.q, mesh.free_dof_count());
    op.P.setFromTriplets(trips.begin(), trips.end());
    op.P.makeCompressed();
    op.visible_vertices = std::move(vis);
    return op;
}

fem::SparseMatrix build_transfer_operator(const Mesh& source, const Mesh& target,
                                          const ProjectionModel& camera,
                                          const std::vector<int>& target_visible) {
    if (!source.structured()) throw ValidationError("transfer source mesh must be structured");
    if (source.kind() != target.kind()) throw ValidationError("source and target element kinds differ");
    validate_visible(target, target_visible);

    const int dpv = source.dof_per_vertex();
    std::vector<Triplet> trips;
    for (int v : target_visible) {
        for (const Weight& w : interpolation_weights(source, target.vertex(v))) {
            for (int c = 0; c < dpv; ++c) {
                const int col = source.dof(w.vertex, c);
                if (col < 0) continue;
                const Eigen::Vector2d a = column_of(camera, source, c) * w.value;
                trips.emplace_back(2 * v, col, a[0]);
                trips.emplace_back(2 * v + 1, col, a[1]);
            }
        }
    }
    fem::SparseMatrix T(2 * target.vertex_count(), source.free_dof_count());
    T.setFromTriplets(trips.begin(), trips.end());
    T.makeCompressed();
    return T;
}

}  // namespace vibtomo::obs
