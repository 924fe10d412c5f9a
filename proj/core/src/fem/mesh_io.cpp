#include "vibtomo/fem/mesh_io.hpp"

#include <fstream>

#include "vibtomo/error.hpp"

namespace vibtomo::fem {

using nlohmann::json;

json grid_to_json(const VoxelGrid& grid) {
    return {{"dims", grid.dims()},
            {"spacing", grid.spacing()},
            {"origin", {grid.origin().x(), grid.origin().y(), grid.origin().z()}}};
}

VoxelGrid grid_from_json(const json& doc) {
    try {
        auto dims = doc.at("dims").get<std::array<int, 3>>();
        double spacing = doc.at("spacing").get<double>();
        Eigen::Vector3d origin = Eigen::Vector3d::Zero();
        if (doc.contains("origin")) {
            auto o = doc.at("origin").get<std::array<double, 3>>();
            origin = {o[0], o[1], o[2]};
        }
        return VoxelGrid(dims, spacing, origin);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("invalid grid document: ") + e.what());
    }
}

json mesh_to_json(const Mesh& mesh) {
    json doc = grid_to_json(mesh.grid());
    doc["kind"] = to_string(mesh.kind());
    doc["fixed_vertices"] = mesh.fixed_vertices();
    if (!mesh.structured()) {
        json verts = json::array();
        for (const auto& p : mesh.vertices()) verts.push_back({p.x(), p.y(), p.z()});
        doc["vertices"] = std::move(verts);
        json elems = json::array();
        for (int e = 0; e < mesh.element_count(); ++e) {
            auto nodes = mesh.element(e);
            elems.push_back(std::vector<int>(nodes.begin(), nodes.end()));
        }
        doc["elements"] = std::move(elems);
        doc["voxel_of_element"] = mesh.voxel_of_element();
    }
    return doc;
}

Mesh mesh_from_json(const json& doc) {
    VoxelGrid grid = grid_from_json(doc);
    try {
        const ElementKind kind = element_kind_from_string(doc.at("kind").get<std::string>());
        auto fixed = doc.value("fixed_vertices", std::vector<int>{});

        if (!doc.contains("vertices")) {
            Mesh base = kind == ElementKind::SolidHex8 ? build_cube_mesh(grid, CubeFace::None)
                                                       : build_membrane_mesh(grid, false);
            return Mesh(kind, grid, base.vertices(), base.connectivity(), std::move(fixed),
                        base.voxel_of_element(), true);
        }

        std::vector<Eigen::Vector3d> vertices;
        for (const auto& p : doc.at("vertices")) {
            auto a = p.get<std::array<double, 3>>();
            vertices.emplace_back(a[0], a[1], a[2]);
        }
        const int npe = kind == ElementKind::SolidHex8 ? 8 : 3;
        std::vector<int> conn;
        for (const auto& el : doc.at("elements")) {
            auto nodes = el.get<std::vector<int>>();
            if (static_cast<int>(nodes.size()) != npe)
                throw ShapeError("element has the wrong number of nodes for its kind");
            conn.insert(conn.end(), nodes.begin(), nodes.end());
        }
        std::vector<int> voxel = doc.contains("voxel_of_element")
                                     ? doc.at("voxel_of_element").get<std::vector<int>>()
                                     : nearest_voxel_assignment(grid, vertices, conn, npe);
        return Mesh(kind, grid, std::move(vertices), std::move(conn), std::move(fixed),
                    std::move(voxel), false);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("invalid mesh document: ") + e.what());
    }
}

void write_mesh(const Mesh& mesh, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write mesh file " + path.string());
    out << mesh_to_json(mesh).dump(2) << '\n';
}

Mesh read_mesh(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read mesh file " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ValidationError("malformed mesh file " + path.string() + ": " + e.what());
    }
    return mesh_from_json(doc);
}

}  // namespace vibtomo::fem
