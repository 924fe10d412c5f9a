#pragma once

#include <memory>
#include <vector>

#include <Eigen/Core>

#include "vibtomo/fem/assembly.hpp"
#include "vibtomo/inverse/config.hpp"
#include "vibtomo/observation/modes.hpp"

namespace vibtomo::inv {

/// Everything that stays fixed during an inversion.
struct InverseProblem {
    const fem::UnitMatrixSet* units = nullptr;
    fem::SparseMatrix P;      // 2q x n sampling operator
    fem::SparseMatrix L;      // m x m Laplacian
    Eigen::MatrixXd gamma;    // 2q x k observed modes
    Eigen::VectorXd omega;    // k angular frequencies [rad/s]
    double residual_scale = 1.0;

    int modes() const { return static_cast<int>(omega.size()); }
    int voxels() const { return units->voxel_count(); }
    int dofs() const { return units->dof_count(); }
};

/// Throws ShapeError on inconsistent sizes. The residual scale is resolved from
/// the config (see InversionConfig::residual_scale).
InverseProblem make_problem(const fem::UnitMatrixSet& units, const fem::VoxelGrid& grid,
                            fem::SparseMatrix P, const std::vector<obs::ObservedMode>& modes,
                            const InversionConfig& config);

struct SolverState {
    Eigen::VectorXd w;
    Eigen::VectorXd v;
    Eigen::MatrixXd U;  // n x k
    Eigen::VectorXd y;  // k
    int iter = 0;
    bool converged = false;
    int clamp_count = 0;
    std::vector<double> objective_history;
    /// Largest eigen-residual per iteration (the hard constraints of the primal problem).
    std::vector<double> max_residual_history;
    Eigen::VectorXd residuals;  // per-mode |K u_i - w_i^2 M u_i|

    static SolverState initial(const InverseProblem& problem, const InversionConfig& config);
};

/// With s the residual scale:
/// (1/2k) sum y_i |A_i u_i / s|^2 + (alpha_u/2k) sum |P u_i - g_i|^2
///   + (alpha_w/2m) |L w|^2 + (alpha_v/2m) |L v|^2 + (mean(w) - w_bar)^2.
double objective(const InverseProblem& problem, const SolverState& state, const InversionConfig& config);

/// Same, reusing an already assembled system for (state.w, state.v).
double objective(const InverseProblem& problem, const SolverState& state, const InversionConfig& config,
                 const fem::GlobalSystem& system);

/// Per-mode |K u_i - omega_i^2 M u_i|.
Eigen::VectorXd eigen_residuals(const InverseProblem& problem, const SolverState& state,
                                const fem::GlobalSystem& system);

/// Caches the sparse symbolic factorizations of the mode-block systems so
/// repeated solves only refactorize numerically.
class ModeBlockSolver {
public:
    ModeBlockSolver();
    ~ModeBlockSolver();
    ModeBlockSolver(ModeBlockSolver&&) noexcept;
    ModeBlockSolver& operator=(ModeBlockSolver&&) noexcept;

    /// u_i = argmin y_i |A_i u / s|^2 + alpha_u |P u - g_i|^2 for every mode, with
    /// A_i = K - omega_i^2 M. A failed factorization is retried with a ridge of
    /// 1e-12 trace / n; a second failure throws DegenerateSystemError.
    void solve(const InverseProblem& problem, SolverState& state, const InversionConfig& config,
               const fem::GlobalSystem& system);

    /// Ridge retries performed so far.
    int ridge_retries() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

void solve_modes_block(const InverseProblem& problem, SolverState& state, const InversionConfig& config);

/// Normal equations H z = rhs of the material block at fixed U and y, z = (w, v).
struct MaterialSystem {
    Eigen::MatrixXd H;
    Eigen::VectorXd rhs;
    double ridge = 0.0;  // proximal density weight actually included
    /// Mean density-block diagonal from data and ridge; zero means v is undetermined.
    double density_information = 0.0;
};

/// With include_ridge = false, H z - rhs is the gradient of objective() in (w, v).
MaterialSystem build_material_system(const InverseProblem& problem, const SolverState& state,
                                     const InversionConfig& config, bool include_ridge);

/// Gradient of objective() with respect to (w, v) at the current state.
Eigen::VectorXd material_gradient(const InverseProblem& problem, const SolverState& state,
                                  const InversionConfig& config);

/// Minimizes the objective over (w, v) at fixed U, then applies the positivity
/// clamp. Throws AnchorMissingError when the density block is undetermined
/// (no mode carries mass information and no ridge is active).
void solve_material_block(const InverseProblem& problem, SolverState& state, const InversionConfig& config);

/// y_i += eta |K u_i - omega_i^2 M u_i| / s; also refreshes state.residuals (unscaled).
void dual_update(const InverseProblem& problem, SolverState& state, const InversionConfig& config,
                 const fem::GlobalSystem& system);

struct InversionResult {
    fem::MaterialField field;
    SolverState state;
};

/// Alternates mode block, material block and dual update until the larger of
/// the relative changes of w and v drops below rel_tol or max_iters is hit.
/// Throws AnchorMissingError without modes and DivergenceError when the
/// objective becomes non-finite.
InversionResult run_inversion(const InverseProblem& problem, const InversionConfig& config);

/// {w, v, y, objective_history, max_residual_history, residuals, iterations, converged, clamp_count}.
nlohmann::json result_to_json(const InversionResult& result);

}  // namespace vibtomo::inv
