#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "vibtomo/fem/assembly.hpp"
#include "vibtomo/fem/mesh.hpp"
#include "vibtomo/inverse/config.hpp"
#include "vibtomo/modal/eigensolver.hpp"
#include "vibtomo/modal/transient.hpp"
#include "vibtomo/observation/observations_io.hpp"
#include "vibtomo/observation/peaks.hpp"
#include "vibtomo/observation/projection.hpp"
#include "vibtomo/observation/spectrum.hpp"

namespace vibtomo::pipeline {

enum class ObjectKind { Cube, Drum };
enum class ObservationSource { Transient, TrueModes };

/// Axis-aligned box in meters; voxels whose centers fall inside take its material.
struct BoxDefect {
    Eigen::Vector3d corner = Eigen::Vector3d::Zero();
    Eigen::Vector3d size = Eigen::Vector3d::Zero();
    double youngs = 0.0;
    double density = 0.0;
};

/// Initial static deflection: the vertex nearest `position` is pulled by `displacement`.
struct Pluck {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    Eigen::Vector3d displacement = Eigen::Vector3d::Zero();
};

struct ExperimentSpec {
    ObjectKind object = ObjectKind::Cube;
    fem::VoxelGrid grid{{8, 8, 8}, 0.05 / 8};
    fem::CubeFace fixed_face = fem::CubeFace::Bottom;  // cubes
    bool boundary_fixed = true;                        // drums
    double nu = 0.3;

    double youngs = 9000.0;
    double density = 1270.0;
    std::vector<BoxDefect> defects;

    obs::ProjectionModel camera;
    std::optional<std::vector<int>> visible_vertices;  // inference-mesh vertices; unset = automatic

    std::vector<Pluck> plucks;
    modal::RayleighDamping damping;
    double fps = 2000.0;
    double duration = 1.0;
    std::optional<double> freq_ceiling_hz;
    int forward_modes = 40;

    ObservationSource source = ObservationSource::Transient;
    /// Keeps the lowest `observed_modes` observations; 0 keeps all.
    int observed_modes = 0;
    obs::PeakOptions peaks;
    obs::Window window = obs::Window::Hann;
    /// Cross-pluck merge tolerance; unset means one FFT bin.
    std::optional<double> merge_tol_hz;

    std::optional<double> noise_snr;
    std::uint64_t seed = 1;

    /// Inference resolution; same physical extent as `grid`. Unset = `grid`.
    std::optional<std::array<int, 3>> inference_dims;
    inv::InversionConfig inversion;

    std::filesystem::path output_dir = "out";

    fem::VoxelGrid inference_grid() const;

    /// Throws ValidationError naming the offending field.
    void validate() const;
};

/// Errors carry JSON paths such as "truth.defects[1].size".
ExperimentSpec experiment_from_json(const nlohmann::json& doc);
ExperimentSpec read_experiment(const std::filesystem::path& path);

/// Background material with the defects painted in (later defects win).
fem::MaterialField truth_field(const ExperimentSpec& spec);

fem::Mesh build_mesh(const ExperimentSpec& spec, const fem::VoxelGrid& grid);

struct SynthesisResult {
    fem::Mesh forward_mesh;
    fem::Mesh inference_mesh;
    fem::MaterialField truth;  // forward grid
    Eigen::VectorXd truth_w;   // resampled to the inference grid
    Eigen::VectorXd truth_v;
    modal::ModalBasis forward_basis;
    obs::ObservationSet observations;
    /// Peak count per pluck before merging (empty for true-mode observations).
    std::vector<int> peaks_per_pluck;
    /// Forward displacement of every pluck, kept only when requested.
    std::vector<modal::DisplacementSeries> series;
};

/// Forward model, transient simulation (or true modes), image-space sampling,
/// spectrum, peak picking, extraction, merging, truncation and noise.
SynthesisResult synthesize(const ExperimentSpec& spec, bool keep_series = false);

}  // namespace vibtomo::pipeline
