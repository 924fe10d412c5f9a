#include "vibtomo/fem/mesh.hpp"

#include <algorithm>

#include "vibtomo/error.hpp"

namespace vibtomo::fem {

std::string to_string(ElementKind kind) {
    return kind == ElementKind::SolidHex8 ? "solid-hex8" : "membrane-tri3";
}

ElementKind element_kind_from_string(const std::string& s) {
    if (s == "solid-hex8") return ElementKind::SolidHex8;
    if (s == "membrane-tri3") return ElementKind::MembraneTri3;
    throw ValidationError("unknown element kind '" + s + "'");
}

CubeFace cube_face_from_string(const std::string& s) {
    if (s == "none" || s.empty()) return CubeFace::None;
    if (s == "bottom") return CubeFace::Bottom;
    if (s == "top") return CubeFace::Top;
    if (s == "front") return CubeFace::Front;
    if (s == "back") return CubeFace::Back;
    if (s == "left") return CubeFace::Left;
    if (s == "right") return CubeFace::Right;
    throw ValidationError("unknown cube face '" + s + "'");
}

std::string to_string(CubeFace face) {
    switch (face) {
    case CubeFace::None: return "none";
    case CubeFace::Bottom: return "bottom";
    case CubeFace::Top: return "top";
    case CubeFace::Front: return "front";
    case CubeFace::Back: return "back";
    case CubeFace::Left: return "left";
    case CubeFace::Right: return "right";
    }
    return "none";
}

Mesh::Mesh(ElementKind kind, VoxelGrid grid, std::vector<Eigen::Vector3d> vertices,
           std::vector<int> connectivity, std::vector<int> fixed_vertices,
           std::vector<int> voxel_of_element, bool structured)
    : kind_(kind),
      grid_(std::move(grid)),
      vertices_(std::move(vertices)),
      connectivity_(std::move(connectivity)),
      fixed_vertices_(std::move(fixed_vertices)),
      voxel_of_element_(std::move(voxel_of_element)),
      structured_(structured) {
    const int q = vertex_count();
    if (connectivity_.size() % nodes_per_element() != 0) {
        throw ShapeError("connectivity length is not a multiple of nodes per element");
    }
    for (int idx : connectivity_) {
        if (idx < 0 || idx >= q) throw ValidationError("element references vertex out of range");
    }
    if (static_cast<int>(voxel_of_element_.size()) != element_count()) {
        throw ShapeError("voxel_of_element must have one entry per element");
    }
    for (int vox : voxel_of_element_) {
        if (vox < 0 || vox >= grid_.size()) throw ValidationError("element voxel out of range");
    }

    std::sort(fixed_vertices_.begin(), fixed_vertices_.end());
    fixed_vertices_.erase(std::unique(fixed_vertices_.begin(), fixed_vertices_.end()),
                          fixed_vertices_.end());
    if (!fixed_vertices_.empty() && (fixed_vertices_.front() < 0 || fixed_vertices_.back() >= q)) {
        throw ValidationError("fixed vertex out of range");
    }

    free_rank_.assign(q, 0);
    for (int f : fixed_vertices_) free_rank_[f] = -1;
    int rank = 0;
    for (int i = 0; i < q; ++i) {
        if (free_rank_[i] == 0) free_rank_[i] = rank++;
    }
    free_vertex_count_ = rank;
}

std::optional<int> Mesh::lattice_vertex(int ix, int iy, int iz) const {
    if (!structured_) return std::nullopt;
    const int nx = grid_.nx() + 1;
    const int ny = grid_.ny() + 1;
    const int nz = kind_ == ElementKind::SolidHex8 ? grid_.nz() + 1 : 1;
    if (ix < 0 || iy < 0 || iz < 0 || ix >= nx || iy >= ny || iz >= nz) return std::nullopt;
    return ix + nx * (iy + ny * iz);
}

Eigen::VectorXd Mesh::expand_to_vertices(const Eigen::Ref<const Eigen::VectorXd>& free) const {
    if (free.size() != free_dof_count()) {
        throw ShapeError("free DOF vector has the wrong length");
    }
    Eigen::VectorXd full = Eigen::VectorXd::Zero(3 * vertex_count());
    for (int v = 0; v < vertex_count(); ++v) {
        if (is_fixed(v)) continue;
        if (kind_ == ElementKind::SolidHex8) {
            for (int c = 0; c < 3; ++c) full[3 * v + c] = free[dof(v, c)];
        } else {
            full[3 * v + 2] = free[dof(v, 0)];
        }
    }
    return full;
}

Mesh build_cube_mesh(const VoxelGrid& grid, CubeFace fixed_face) {
    const int nx = grid.nx(), ny = grid.ny(), nz = grid.nz();
    const int vx = nx + 1, vy = ny + 1, vz = nz + 1;
    auto vid = [&](int i, int j, int k) { return i + vx * (j + vy * k); };

    std::vector<Eigen::Vector3d> vertices;
    vertices.reserve(static_cast<std::size_t>(vx) * vy * vz);
    for (int k = 0; k < vz; ++k)
        for (int j = 0; j < vy; ++j)
            for (int i = 0; i < vx; ++i)
                vertices.push_back(grid.origin() + grid.spacing() * Eigen::Vector3d(i, j, k));

    std::vector<int> conn;
    std::vector<int> voxel;
    conn.reserve(static_cast<std::size_t>(grid.size()) * 8);
    voxel.reserve(grid.size());
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const int nodes[8] = {vid(i, j, k),         vid(i + 1, j, k),
                                      vid(i + 1, j + 1, k), vid(i, j + 1, k),
                                      vid(i, j, k + 1),     vid(i + 1, j, k + 1),
                                      vid(i + 1, j + 1, k + 1), vid(i, j + 1, k + 1)};
                conn.insert(conn.end(), std::begin(nodes), std::end(nodes));
                voxel.push_back(grid.index(i, j, k));
            }

    std::vector<int> fixed;
    auto on_face = [&](int i, int j, int k) {
        switch (fixed_face) {
        case CubeFace::None: return false;
        case CubeFace::Bottom: return k == 0;
        case CubeFace::Top: return k == nz;
        case CubeFace::Front: return j == 0;
        case CubeFace::Back: return j == ny;
        case CubeFace::Left: return i == 0;
        case CubeFace::Right: return i == nx;
        }
        return false;
    };
    for (int k = 0; k < vz; ++k)
        for (int j = 0; j < vy; ++j)
            for (int i = 0; i < vx; ++i)
                if (on_face(i, j, k)) fixed.push_back(vid(i, j, k));

    return Mesh(ElementKind::SolidHex8, grid, std::move(vertices), std::move(conn),
                std::move(fixed), std::move(voxel), true);
}

Mesh build_membrane_mesh(const VoxelGrid& grid, bool boundary_fixed) {
    if (grid.nz() != 1) throw ShapeError("membrane meshes require a grid with nz = 1");
    const int nx = grid.nx(), ny = grid.ny();
    const int vx = nx + 1, vy = ny + 1;
    auto vid = [&](int i, int j) { return i + vx * j; };

    std::vector<Eigen::Vector3d> vertices;
    vertices.reserve(static_cast<std::size_t>(vx) * vy);
    for (int j = 0; j < vy; ++j)
        for (int i = 0; i < vx; ++i)
            vertices.push_back(grid.origin() + grid.spacing() * Eigen::Vector3d(i, j, 0.0));

    std::vector<int> conn;
    std::vector<int> voxel;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const int a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1), d = vid(i, j + 1);
            conn.insert(conn.end(), {a, b, c, a, c, d});
            voxel.push_back(grid.index(i, j, 0));
            voxel.push_back(grid.index(i, j, 0));
        }

    std::vector<int> fixed;
    if (boundary_fixed) {
        for (int j = 0; j < vy; ++j)
            for (int i = 0; i < vx; ++i)
                if (i == 0 || j == 0 || i == nx || j == ny) fixed.push_back(vid(i, j));
    }
    return Mesh(ElementKind::MembraneTri3, grid, std::move(vertices), std::move(conn),
                std::move(fixed), std::move(voxel), true);
}

std::vector<int> nearest_voxel_assignment(const VoxelGrid& grid,
                                          const std::vector<Eigen::Vector3d>& vertices,
                                          const std::vector<int>& connectivity,
                                          int nodes_per_element) {
    std::vector<int> out;
    out.reserve(connectivity.size() / nodes_per_element);
    for (std::size_t e = 0; e + nodes_per_element <= connectivity.size(); e += nodes_per_element) {
        Eigen::Vector3d c = Eigen::Vector3d::Zero();
        for (int a = 0; a < nodes_per_element; ++a) c += vertices.at(connectivity[e + a]);
        out.push_back(grid.nearest_voxel(c / nodes_per_element));
    }
    return out;
}

}  // namespace vibtomo::fem
