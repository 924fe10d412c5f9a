#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "vibtomo/fem/assembly.hpp"
#include "vibtomo/fem/grid.hpp"
#include "vibtomo/modal/eigensolver.hpp"

namespace vibtomo::eval {

/// Pearson correlation of two flattened fields. Throws ShapeError for a length
/// mismatch and ValidationError when either field is constant.
double normalized_correlation(const Eigen::VectorXd& est, const Eigen::VectorXd& truth);

/// Separable Gaussian blur on the voxel grid, kernel radius ceil(3 sigma),
/// normalized weights, half-sample mirrored boundaries. sigma = 0 is the identity.
Eigen::VectorXd gaussian_blur(const Eigen::VectorXd& field, const fem::VoxelGrid& grid, double sigma);

struct ResolutionCurve {
    double sigma_star = 0.0;
    std::vector<double> sigmas;
    std::vector<double> correlations;
};

/// Correlation of est with blur(truth, sigma) over an ascending sweep; sigma_star
/// is the argmax (first on ties).
ResolutionCurve intrinsic_resolution(const Eigen::VectorXd& est, const Eigen::VectorXd& truth,
                                     const fem::VoxelGrid& grid, const std::vector<double>& sigmas);

struct FrequencyPair {
    double reference_hz;
    double predicted_hz;
    double relative_error;
    int predicted_index;
};

struct FrequencyComparison {
    std::vector<FrequencyPair> pairs;
    /// |cos| between S u_pred and the reference gamma for each pair (empty without gammas).
    std::vector<double> mode_similarity;
    double mean_relative_error() const;
};

/// Solves the estimated field's first `count` modes (count >= reference size)
/// and pairs each reference frequency, in ascending order, with the nearest
/// unused predicted frequency. With `gammas` (2q x r, matching the reference
/// order) and a sampling operator S, the image-space similarity is reported.
FrequencyComparison compare_frequencies(const fem::MaterialField& estimate, const fem::UnitMatrixSet& units,
                                        const std::vector<double>& reference_hz, int count,
                                        const Eigen::MatrixXd* gammas = nullptr,
                                        const fem::SparseMatrix* sampler = nullptr);

struct ReconReport {
    double corr_w = 0.0;
    double corr_v = 0.0;
    ResolutionCurve resolution_w;
    std::optional<FrequencyComparison> frequencies;
};

nlohmann::json report_to_json(const ReconReport& report);
/// "sigma,correlation" rows.
std::string resolution_csv(const ResolutionCurve& curve);
/// "reference_hz,predicted_hz,relative_error,similarity" rows.
std::string frequency_csv(const FrequencyComparison& cmp);

/// Inclusive voxel bounding box.
struct VoxelBox {
    std::array<int, 3> lo{};
    std::array<int, 3> hi{};
    bool overlaps(const VoxelBox& other) const;
};

/// Bounding box of the voxels whose value is at least the given quantile of the field.
VoxelBox bright_region(const Eigen::VectorXd& field, const fem::VoxelGrid& grid, double quantile = 0.95);

}  // namespace vibtomo::eval
