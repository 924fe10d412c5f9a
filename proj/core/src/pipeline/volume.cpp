#include "vibtomo/pipeline/volume.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "vibtomo/error.hpp"
#include "vibtomo/fem/mesh_io.hpp"

namespace vibtomo::pipeline {

using nlohmann::json;

void VolumeFile::validate() const {
    if (values.size() != grid.size())
        throw ShapeError("volume '" + name + "' has " + std::to_string(values.size()) +
                         " values for " + std::to_string(grid.size()) + " voxels");
}

json volume_to_json(const VolumeFile& volume) {
    volume.validate();
    json doc = fem::grid_to_json(volume.grid);
    doc["name"] = volume.name;
    doc["units"] = volume.units;
    doc["values"] = std::vector<double>(volume.values.data(), volume.values.data() + volume.values.size());
    return doc;
}

VolumeFile volume_from_json(const json& doc) {
    VolumeFile volume;
    volume.grid = fem::grid_from_json(doc);
    try {
        volume.name = doc.value("name", std::string{});
        volume.units = doc.value("units", std::string{});
        const auto values = doc.at("values").get<std::vector<double>>();
        volume.values = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    } catch (const json::exception& e) {
        throw ValidationError(std::string("invalid volume document: ") + e.what());
    }
    volume.validate();
    return volume;
}

void write_volume(const VolumeFile& volume, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
    out << volume_to_json(volume).dump() << '\n';
}

VolumeFile read_volume(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    return volume_from_json(doc);
}

namespace {

// Overlap length of [a0, a1) and [b0, b1).
double overlap(double a0, double a1, double b0, double b1) {
    return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

// Per axis: for every target cell, the (source cell, length) pairs it overlaps.
std::vector<std::vector<std::pair<int, double>>> axis_weights(const fem::VoxelGrid& s, const fem::VoxelGrid& t,
                                                              int axis) {
    const int ns = s.dims()[axis], nt = t.dims()[axis];
    std::vector<std::vector<std::pair<int, double>>> out(nt);
    for (int j = 0; j < nt; ++j) {
        const double b0 = t.origin()[axis] + j * t.spacing(), b1 = b0 + t.spacing();
        for (int i = 0; i < ns; ++i) {
            const double a0 = s.origin()[axis] + i * s.spacing();
            const double len = overlap(a0, a0 + s.spacing(), b0, b1);
            if (len > 1e-12 * t.spacing()) out[j].emplace_back(i, len);
        }
    }
    return out;
}

}  // namespace

Eigen::VectorXd resample_volume(const Eigen::VectorXd& values, const fem::VoxelGrid& source,
                                const fem::VoxelGrid& target) {
    if (values.size() != source.size()) throw ShapeError("resample_volume: values do not match source grid");
    if (source == target) return values;
    const auto wx = axis_weights(source, target, 0);
    const auto wy = axis_weights(source, target, 1);
    const auto wz = axis_weights(source, target, 2);

    Eigen::VectorXd out(target.size());
    for (int iz = 0; iz < target.nz(); ++iz)
        for (int iy = 0; iy < target.ny(); ++iy)
            for (int ix = 0; ix < target.nx(); ++ix) {
                double sum = 0.0, weight = 0.0;
                for (auto [sz, lz] : wz[iz])
                    for (auto [sy, ly] : wy[iy])
                        for (auto [sx, lx] : wx[ix]) {
                            const double vol = lx * ly * lz;
                            sum += vol * values[source.index(sx, sy, sz)];
                            weight += vol;
                        }
                if (weight <= 0.0) throw ValidationError("resample_volume: target voxel outside the source grid");
                out[target.index(ix, iy, iz)] = sum / weight;
            }
    return out;
}

}  // namespace vibtomo::pipeline
