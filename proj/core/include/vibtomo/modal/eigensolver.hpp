#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Core>

#include "vibtomo/fem/assembly.hpp"

namespace vibtomo::modal {

/// Mass-normalized modes (columns) with ascending eigenvalues omega^2 [(rad/s)^2].
struct ModalBasis {
    Eigen::MatrixXd modes;
    Eigen::VectorXd eigenvalues;

    int count() const { return static_cast<int>(eigenvalues.size()); }
    int dof_count() const { return static_cast<int>(modes.rows()); }
    Eigen::VectorXd omegas() const;
    Eigen::VectorXd frequencies_hz() const;

    /// First `k` modes.
    ModalBasis truncated(int k) const;
};

enum class EigenMethod {
    Auto,         ///< dense for n <= dense_threshold, shift-invert otherwise
    Dense,
    ShiftInvert,  ///< block Lanczos on (K - sigma M)^-1 M with full reorthogonalization
};

struct EigenOptions {
    EigenMethod method = EigenMethod::Auto;
    int dense_threshold = 500;
    /// Relative residual ||K u - l M u|| / (max(|l|, |sigma|) ||M u||) required per pair.
    double tolerance = 1e-10;
    int block_size = 6;
    /// Krylov subspace cap; 0 means max(20 k, 2 k + 100) clamped to n.
    int max_subspace = 0;
    /// Thick restarts allowed once the subspace cap is reached before giving up.
    int max_restarts = 50;
    std::uint64_t seed = 0x9e3779b97f4a7c15ULL;
};

/// The `count` smallest generalized eigenpairs of (K, M), mass-normalized and
/// sign-fixed (first significant entry positive). When freq_ceiling_hz is set
/// the result is truncated to modes at or below it.
ModalBasis solve_modes(const fem::GlobalSystem& system, int count,
                       std::optional<double> freq_ceiling_hz = std::nullopt,
                       const EigenOptions& options = {});

/// Relative residual of one pair, as used for the convergence test.
double relative_residual(const fem::GlobalSystem& system, const Eigen::VectorXd& u,
                         double eigenvalue);

}  // namespace vibtomo::modal
