#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "vibtomo/inverse/config.hpp"
#include "vibtomo/observation/peaks.hpp"
#include "vibtomo/pipeline/experiment.hpp"
#include "vibtomo/pipeline/heatmap.hpp"

namespace vibtomo::pipeline {

/// Writes into out_dir: mesh.json (inference mesh), forward_mesh.json,
/// truth_w.json / truth_v.json (inference grid), truth_forward_w.json /
/// truth_forward_v.json, observations.json, inversion.json, forward_modes.csv
/// and, with write_series, series_<i>.bin per pluck.
void cmd_synth(const ExperimentSpec& spec, const std::filesystem::path& out_dir, bool write_series,
               std::ostream& log);

struct InvertOptions {
    std::filesystem::path observations;
    std::filesystem::path mesh;
    inv::InversionConfig config;
    std::optional<double> freq_ceiling_hz;
    /// Keeps the lowest k modes; 0 keeps all.
    int max_modes = 0;
    std::filesystem::path out_dir = "out";
};

/// Writes w.json, v.json and state.json. Returns 0 on convergence and 3 when
/// max_iters was reached (the fields are written either way).
int cmd_invert(const InvertOptions& options, std::ostream& log);

struct EvalOptions {
    std::filesystem::path est_w, est_v, truth_w, truth_v;
    std::vector<double> sigmas = {0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0};
    /// With both set, predicted frequencies of the estimate are compared to the observations.
    std::optional<std::filesystem::path> mesh;
    std::optional<std::filesystem::path> observations;
    double nu = 0.3;
    Colormap colormap = Colormap::Heat;
    int pixel_scale = 16;
    bool heatmaps = true;
    std::filesystem::path out_dir = "eval";
};

/// Writes report.json, resolution.csv, frequencies.csv (when requested) and
/// per-slice PNGs of estimate and truth with one color scale per field.
void cmd_eval(const EvalOptions& options, std::ostream& log);

/// Natural frequencies of a mesh with w, v volumes: modes.csv and modes.json.
void cmd_modes(const std::filesystem::path& mesh, const std::filesystem::path& w, const std::filesystem::path& v,
               int count, std::optional<double> freq_ceiling_hz, double nu, const std::filesystem::path& out_dir,
               std::ostream& log);

/// Samples a displacement series through the camera of an observations file
/// (automatic visibility on the series mesh), picks peaks and fits a damping
/// ratio to each. Writes damping.csv and damping.json.
void cmd_damping(const std::filesystem::path& series, const std::filesystem::path& mesh,
                 const std::filesystem::path& observations, const obs::PeakOptions& peaks,
                 const std::filesystem::path& out_dir, std::ostream& log);

/// Synthesizes once and inverts with the lowest k modes for every k in
/// mode_counts. Writes sweep.csv and sweep.json, whose trend flags report
/// whether corr_w rises and sigma_star falls with k (sign of the
/// least-squares slope).
void cmd_sweep(const ExperimentSpec& spec, std::vector<int> mode_counts, const std::vector<double>& sigmas,
               const std::filesystem::path& out_dir, std::ostream& log);

/// Slope of the least-squares line through (x_i, y_i).
double trend_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace vibtomo::pipeline
