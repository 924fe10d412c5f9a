#pragma once

#include <optional>

#include <Eigen/Core>

#include "vibtomo/fem/assembly.hpp"
#include "vibtomo/fem/mesh.hpp"
#include "vibtomo/modal/eigensolver.hpp"

namespace vibtomo::modal {

/// Damping matrix alpha M + beta K; modal ratio zeta(omega) = alpha/(2 omega) + beta omega/2.
struct RayleighDamping {
    double alpha = 0.0;  // 1/s
    double beta = 0.0;   // s

    double ratio(double omega) const { return alpha / (2.0 * omega) + beta * omega / 2.0; }
};

struct DampingPoint {
    double freq_hz;
    double zeta;
};

/// Solves zeta_j = alpha/(2 w_j) + beta w_j / 2 for two (frequency, ratio) pairs.
/// Throws ValidationError for equal or non-positive frequencies or negative ratios.
RayleighDamping rayleigh_from_ratios(DampingPoint p1, DampingPoint p2);

/// Free-DOF displacement frames (T x n, one row per frame).
struct DisplacementSeries {
    Eigen::MatrixXd frames;
    double fps = 0.0;

    int frame_count() const { return static_cast<int>(frames.rows()); }
    int dof_count() const { return static_cast<int>(frames.cols()); }
    double duration() const { return frame_count() / fps; }
};

/// Modal coordinates q_i(t) and their rates at t = j / fps, j = 0..T-1 (T x k).
struct ModalTrajectory {
    Eigen::MatrixXd q;
    Eigen::MatrixXd qdot;
    double fps = 0.0;
};

/// round(duration * fps); throws ValidationError when fps <= 0 or fewer than 2 frames.
int frame_count(double fps, double duration);

/// q = U^T M x for a mass-normalized basis.
Eigen::VectorXd project_onto_modes(const ModalBasis& basis, const fem::SparseMatrix& M,
                                   const Eigen::VectorXd& x);

/// Closed-form damped free vibration of each modal coordinate. Throws
/// UnsupportedDampingError when any mode has zeta >= 1 or omega <= 0.
ModalTrajectory evolve_modes(const ModalBasis& basis, const RayleighDamping& damping,
                             const Eigen::VectorXd& q0, const Eigen::VectorXd& qdot0, double fps,
                             int frames);

/// Modal superposition: x(t) = sum_i q_i(t) u_i with q_i(0) = u_i^T M d0.
DisplacementSeries simulate_transient(const ModalBasis& basis, const fem::SparseMatrix& M,
                                      const RayleighDamping& damping, const Eigen::VectorXd& d0,
                                      const std::optional<Eigen::VectorXd>& v0, double fps,
                                      double duration);

/// Static "pluck" shape: the displacement produced by the point load at
/// `vertex` whose own displacement equals `target` exactly. For membranes only
/// target.z() is used.
Eigen::VectorXd pluck_shape(const fem::Mesh& mesh, const fem::SparseMatrix& K, int vertex,
                            const Eigen::Vector3d& target);

}  // namespace vibtomo::modal
