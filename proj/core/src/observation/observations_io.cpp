#include "vibtomo/observation/observations_io.hpp"

#include <algorithm>
#include <fstream>

#include "vibtomo/error.hpp"

namespace vibtomo::obs {

using nlohmann::json;

void ObservationSet::truncate_above(double freq_hz) {
    std::erase_if(modes, [freq_hz](const ObservedMode& m) { return m.frequency_hz() > freq_hz; });
}

Eigen::VectorXd ObservationSet::visible_row_mask() const {
    Eigen::VectorXd mask = Eigen::VectorXd::Zero(2 * q);
    for (int v : visible_vertices) mask.segment<2>(2 * v).setOnes();
    return mask;
}

json observations_to_json(const ObservationSet& set) {
    json modes = json::array();
    for (const auto& m : set.modes) {
        modes.push_back({{"omega_rad_s", m.omega},
                         {"bin", m.bin},
                         {"power", m.power},
                         {"gamma", std::vector<double>(m.gamma.data(), m.gamma.data() + m.gamma.size())}});
    }
    const auto& A = set.projection.A;
    return {{"q", set.q},
            {"modes", std::move(modes)},
            {"projection",
             {{"A", {{A(0, 0), A(0, 1), A(0, 2)}, {A(1, 0), A(1, 1), A(1, 2)}}},
              {"b", {set.projection.b.x(), set.projection.b.y()}}}},
            {"visible_vertices", set.visible_vertices}};
}

ObservationSet observations_from_json(const json& doc) {
    ObservationSet set;
    try {
        set.q = doc.at("q").get<int>();
        if (set.q <= 0) throw ValidationError("observation q must be positive");
        const auto A = doc.at("projection").at("A").get<std::array<std::array<double, 3>, 2>>();
        const auto b = doc.at("projection").at("b").get<std::array<double, 2>>();
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 3; ++c) set.projection.A(r, c) = A[r][c];
        set.projection.b = {b[0], b[1]};
        set.visible_vertices = doc.at("visible_vertices").get<std::vector<int>>();
        for (int v : set.visible_vertices)
            if (v < 0 || v >= set.q) throw ValidationError("visible vertex index out of range");
        for (const auto& jm : doc.at("modes")) {
            ObservedMode m;
            m.omega = jm.at("omega_rad_s").get<double>();
            m.bin = jm.value("bin", -1);
            m.power = jm.value("power", 0.0);
            const auto g = jm.at("gamma").get<std::vector<double>>();
            if (static_cast<int>(g.size()) != 2 * set.q)
                throw ShapeError("gamma length " + std::to_string(g.size()) + " != 2q");
            if (!(m.omega > 0.0)) throw ValidationError("mode omega must be positive");
            m.gamma = Eigen::Map<const Eigen::VectorXd>(g.data(), static_cast<Eigen::Index>(g.size()));
            set.modes.push_back(std::move(m));
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("invalid observations document: ") + e.what());
    }
    return set;
}

void write_observations(const ObservationSet& set, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
    out << observations_to_json(set).dump(1) << '\n';
}

ObservationSet read_observations(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ValidationError("malformed JSON in " + path.string() + ": " + e.what());
    }
    return observations_from_json(doc);
}

}  // namespace vibtomo::obs
