#pragma once

#include <vector>

#include "vibtomo/observation/spectrum.hpp"

namespace vibtomo::obs {

struct PeakOptions {
    double min_prominence = 2.0;  // natural-log power
    int min_separation = 2;       // bins
    int max_peaks = 0;            // 0: unlimited
    /// Power below floor_rel * max is clamped before taking the log, so
    /// numerically zero bins cannot fake large prominences.
    double floor_rel = 1e-12;
};

/// Topographic prominence of every strict local maximum (plateaus resolved
/// to their middle sample) of `values`, indexed like `values`. Non-peaks get -1.
std::vector<double> peak_prominences(const Eigen::VectorXd& values);

/// FFT bins (>= 1) of log-power peaks, kept greedily by descending prominence
/// under the separation constraint, returned in ascending frequency.
std::vector<int> find_peaks(const Spectrum& spectrum, const PeakOptions& options = {});

}  // namespace vibtomo::obs
