#pragma once

#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "vibtomo/observation/modes.hpp"
#include "vibtomo/observation/projection.hpp"

namespace vibtomo::obs {

struct ObservationSet {
    int q = 0;
    std::vector<ObservedMode> modes;
    ProjectionModel projection;
    std::vector<int> visible_vertices;

    /// Drops modes above the given frequency (camera Nyquist truncation).
    void truncate_above(double freq_hz);
    Eigen::VectorXd visible_row_mask() const;
};

/// {q, modes: [{omega_rad_s, bin, power, gamma}], projection: {A, b}, visible_vertices}.
nlohmann::json observations_to_json(const ObservationSet& set);
ObservationSet observations_from_json(const nlohmann::json& doc);

void write_observations(const ObservationSet& set, const std::filesystem::path& path);
ObservationSet read_observations(const std::filesystem::path& path);

}  // namespace vibtomo::obs
