#pragma once

#include <filesystem>
#include <optional>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

namespace vibtomo::inv {

struct InversionConfig {
    /// Data weight; unset selects 10 for >= 10 observed modes and 1 otherwise.
    std::optional<double> alpha_u;
    double alpha_w = 1e-10;
    double alpha_v = 1e-7;
    double eta = 1.0;
    double w_bar = 9000.0;
    /// Homogeneous initial values, overridden per voxel by w_init_field / v_init_field.
    double w_init = 9000.0;
    double v_init = 1270.0;
    Eigen::VectorXd w_init_field;
    Eigen::VectorXd v_init_field;
    double y_init = 1.0;
    /// Eigen-residuals enter the objective and the dual update divided by this
    /// length-and-stiffness scale. Unset: mean diag K(w_init) / sqrt(mean
    /// nonzero diag P^T P), which makes the weights independent of the unit
    /// system. 1 gives the unnormalized objective.
    std::optional<double> residual_scale;
    int max_iters = 100;
    double rel_tol = 1e-4;
    double nu = 0.3;
    /// Proximal density ridge eps_v |v - v_current|^2 with eps_v = 1e-8 times the
    /// mean diagonal of the density block.
    bool density_ridge = true;
    /// Clamp w, v to 1e-6 (w_bar, mean v_init) after every material block.
    bool clamp_positive = true;

    double alpha_u_for(int modes) const;
    Eigen::VectorXd initial_w(int voxels) const;
    Eigen::VectorXd initial_v(int voxels) const;

    /// Throws ValidationError for negative weights, eta <= 0, w_bar <= 0, ...
    void validate() const;

    /// Cube and drum presets.
    static InversionConfig cube_defaults();
    static InversionConfig drum_defaults();
};

nlohmann::json config_to_json(const InversionConfig& config);
/// Missing keys keep their defaults; the optional "preset" key ("cube" or
/// "drum") selects the starting values.
InversionConfig config_from_json(const nlohmann::json& doc);
InversionConfig read_config(const std::filesystem::path& path);

}  // namespace vibtomo::inv
