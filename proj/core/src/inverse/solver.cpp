#include "vibtomo/inverse/solver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/SparseLU>

#include "vibtomo/error.hpp"
#include "vibtomo/inverse/laplacian.hpp"
#include "vibtomo/parallel.hpp"

namespace vibtomo::inv {

using fem::SparseMatrix;
using Triplet = Eigen::Triplet<double>;

namespace {

fem::GlobalSystem assemble(const InverseProblem& p, const SolverState& s) {
    return {p.units->combine_stiffness(s.w), p.units->combine_mass(s.v)};
}

double relative_change(const Eigen::VectorXd& now, const Eigen::VectorXd& before) {
    const double base = before.norm();
    return base > 0.0 ? (now - before).norm() / base : (now - before).norm();
}

}  // namespace

InverseProblem make_problem(const fem::UnitMatrixSet& units, const fem::VoxelGrid& grid, SparseMatrix P,
                            const std::vector<obs::ObservedMode>& modes, const InversionConfig& config) {
    if (grid.size() != units.voxel_count()) throw ShapeError("grid size does not match unit matrix count");
    if (P.cols() != units.dof_count()) throw ShapeError("sampling operator columns do not match free DOFs");
    InverseProblem p;
    p.units = &units;
    p.P = std::move(P);
    p.L = build_laplacian(grid);
    const int k = static_cast<int>(modes.size());
    p.gamma.resize(p.P.rows(), k);
    p.omega.resize(k);
    for (int i = 0; i < k; ++i) {
        if (modes[i].gamma.size() != p.P.rows()) throw ShapeError("observed mode length does not match 2q");
        p.gamma.col(i) = modes[i].gamma;
        p.omega[i] = modes[i].omega;
    }
    if (config.residual_scale) {
        p.residual_scale = *config.residual_scale;
    } else {
        const SparseMatrix K0 = units.combine_stiffness(config.initial_w(units.voxel_count()));
        const Eigen::VectorXd ptp = SparseMatrix(p.P.transpose() * p.P).diagonal();
        double sum = 0.0;
        int count = 0;
        for (Eigen::Index j = 0; j < ptp.size(); ++j)
            if (ptp[j] > 0.0) {
                sum += ptp[j];
                ++count;
            }
        const double kdiag = K0.diagonal().mean();
        p.residual_scale = count > 0 && kdiag > 0.0 ? kdiag / std::sqrt(sum / count) : 1.0;
    }
    return p;
}

SolverState SolverState::initial(const InverseProblem& problem, const InversionConfig& config) {
    SolverState s;
    s.w = config.initial_w(problem.voxels());
    s.v = config.initial_v(problem.voxels());
    s.U = Eigen::MatrixXd::Zero(problem.dofs(), problem.modes());
    s.y = Eigen::VectorXd::Constant(problem.modes(), config.y_init);
    s.residuals = Eigen::VectorXd::Zero(problem.modes());
    return s;
}

Eigen::VectorXd eigen_residuals(const InverseProblem& problem, const SolverState& state,
                                const fem::GlobalSystem& system) {
    const int k = problem.modes();
    Eigen::VectorXd r(k);
    for (int i = 0; i < k; ++i) {
        const Eigen::VectorXd u = state.U.col(i);
        r[i] = (system.K * u - problem.omega[i] * problem.omega[i] * (system.M * u)).norm();
    }
    return r;
}

double objective(const InverseProblem& problem, const SolverState& state, const InversionConfig& config,
                 const fem::GlobalSystem& system) {
    const int k = problem.modes();
    const int m = problem.voxels();
    const double alpha_u = config.alpha_u_for(k);
    double value = 0.0;
    if (k > 0) {
        const Eigen::VectorXd r = eigen_residuals(problem, state, system);
        double data = 0.0, fit = 0.0;
        for (int i = 0; i < k; ++i) {
            data += state.y[i] * r[i] * r[i] / (problem.residual_scale * problem.residual_scale);
            fit += (problem.P * state.U.col(i) - problem.gamma.col(i)).squaredNorm();
        }
        value += (data + alpha_u * fit) / (2.0 * k);
    }
    value += config.alpha_w / (2.0 * m) * (problem.L * state.w).squaredNorm();
    value += config.alpha_v / (2.0 * m) * (problem.L * state.v).squaredNorm();
    const double anchor = state.w.mean() - config.w_bar;
    return value + anchor * anchor;
}

double objective(const InverseProblem& problem, const SolverState& state, const InversionConfig& config) {
    return objective(problem, state, config, assemble(problem, state));
}

// ---------------------------------------------------------------------------
// Mode block

struct ModeBlockSolver::Impl {
    // Supernodal LU outperforms the simplicial Cholesky on these wide-stencil
    // SPD systems; its column ordering is computed once per pattern.
    struct Slot {
        Eigen::SparseLU<SparseMatrix> lu;
        std::vector<int> outer, inner;  // pattern the symbolic factorization belongs to
    };
    std::vector<Slot> slots;
    std::atomic<int> ridge_retries{0};

    static bool same_pattern(const Slot& s, const SparseMatrix& A) {
        return static_cast<int>(s.outer.size()) == A.outerSize() + 1 &&
               static_cast<int>(s.inner.size()) == A.nonZeros() &&
               std::equal(s.outer.begin(), s.outer.end(), A.outerIndexPtr()) &&
               std::equal(s.inner.begin(), s.inner.end(), A.innerIndexPtr());
    }

    void factorize(Slot& s, SparseMatrix& A) {
        if (!same_pattern(s, A)) {
            s.lu.analyzePattern(A);
            s.outer.assign(A.outerIndexPtr(), A.outerIndexPtr() + A.outerSize() + 1);
            s.inner.assign(A.innerIndexPtr(), A.innerIndexPtr() + A.nonZeros());
        }
        s.lu.factorize(A);
        if (s.lu.info() == Eigen::Success) return;
        ++ridge_retries;
        const double tau = 1e-12 * A.diagonal().sum() / A.rows();
        for (int j = 0; j < A.rows(); ++j) A.coeffRef(j, j) += tau > 0.0 ? tau : 1e-300;
        s.lu.factorize(A);
        if (s.lu.info() != Eigen::Success)
            throw DegenerateSystemError("mode block system is singular even after ridge regularization");
    }
};

ModeBlockSolver::ModeBlockSolver() : impl_(std::make_unique<Impl>()) {}
ModeBlockSolver::~ModeBlockSolver() = default;
ModeBlockSolver::ModeBlockSolver(ModeBlockSolver&&) noexcept = default;
ModeBlockSolver& ModeBlockSolver::operator=(ModeBlockSolver&&) noexcept = default;

int ModeBlockSolver::ridge_retries() const { return impl_->ridge_retries.load(); }

void ModeBlockSolver::solve(const InverseProblem& problem, SolverState& state, const InversionConfig& config,
                            const fem::GlobalSystem& system) {
    const int k = problem.modes();
    const double alpha_u = config.alpha_u_for(k);
    if (static_cast<int>(impl_->slots.size()) != k) impl_->slots = std::vector<Impl::Slot>(k);

    const SparseMatrix PtP = SparseMatrix(problem.P.transpose() * problem.P) * alpha_u;
    parallel_for(static_cast<std::size_t>(k), [&](std::size_t idx) {
        const int i = static_cast<int>(idx);
        const double w2 = problem.omega[i] * problem.omega[i];
        const SparseMatrix A = system.K - w2 * system.M;
        const double weight = state.y[i] / (problem.residual_scale * problem.residual_scale);
        SparseMatrix S = weight * SparseMatrix(A * A) + PtP;
        S.makeCompressed();
        impl_->factorize(impl_->slots[i], S);
        const Eigen::VectorXd rhs = alpha_u * (problem.P.transpose() * problem.gamma.col(i));
        state.U.col(i) = impl_->slots[i].lu.solve(rhs);
    });
}

void solve_modes_block(const InverseProblem& problem, SolverState& state, const InversionConfig& config) {
    ModeBlockSolver solver;
    solver.solve(problem, state, config, assemble(problem, state));
}

// ---------------------------------------------------------------------------
// Material block

namespace {

// B_i = [K_1 u .. K_m u | -w^2 M_1 u .. -w^2 M_m u] (n x 2m).
SparseMatrix material_operator(const fem::UnitMatrixSet& units, const Eigen::VectorXd& u, double w2) {
    const int m = units.voxel_count();
    std::vector<Triplet> trips;
    std::size_t total = 0;
    for (const auto& b : units.blocks()) total += 2 * b.dofs.size();
    trips.reserve(total);
    Eigen::VectorXd local;
    for (int e = 0; e < m; ++e) {
        const auto& b = units.block(e);
        const int nd = static_cast<int>(b.dofs.size());
        local.resize(nd);
        for (int a = 0; a < nd; ++a) local[a] = u[b.dofs[a]];
        const Eigen::VectorXd ku = b.K * local;
        const Eigen::VectorXd mu = b.M * local;
        for (int a = 0; a < nd; ++a) {
            trips.emplace_back(b.dofs[a], e, ku[a]);
            trips.emplace_back(b.dofs[a], m + e, -w2 * mu[a]);
        }
    }
    SparseMatrix B(units.dof_count(), 2 * m);
    B.setFromTriplets(trips.begin(), trips.end());
    return B;
}

void add_sparse(Eigen::MatrixXd& dense, const SparseMatrix& S, double scale, int row0 = 0, int col0 = 0) {
    for (int c = 0; c < S.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(S, c); it; ++it)
            dense(row0 + it.row(), col0 + it.col()) += scale * it.value();
}

}  // namespace

MaterialSystem build_material_system(const InverseProblem& problem, const SolverState& state,
                                     const InversionConfig& config, bool include_ridge) {
    const int k = problem.modes();
    const int m = problem.voxels();
    MaterialSystem sys;
    sys.H = Eigen::MatrixXd::Zero(2 * m, 2 * m);
    sys.rhs = Eigen::VectorXd::Zero(2 * m);

    std::vector<SparseMatrix> gram(k);
    parallel_for(static_cast<std::size_t>(k), [&](std::size_t i) {
        const double w2 = problem.omega[i] * problem.omega[i];
        const SparseMatrix B = material_operator(*problem.units, state.U.col(i), w2);
        gram[i] = SparseMatrix(B.transpose() * B);
    });
    const double s2 = problem.residual_scale * problem.residual_scale;
    for (int i = 0; i < k; ++i) add_sparse(sys.H, gram[i], state.y[i] / (k * s2));
    const double density_data = sys.H.diagonal().tail(m).mean();

    const SparseMatrix LtL = SparseMatrix(problem.L.transpose() * problem.L);
    add_sparse(sys.H, LtL, config.alpha_w / m);
    add_sparse(sys.H, LtL, config.alpha_v / m, m, m);
    sys.H.topLeftCorner(m, m).array() += 2.0 / (static_cast<double>(m) * m);
    sys.rhs.head(m).setConstant(2.0 * config.w_bar / m);

    sys.density_information = density_data;
    if (include_ridge && config.density_ridge) {
        sys.ridge = 1e-8 * sys.H.diagonal().tail(m).mean();
        sys.H.diagonal().tail(m).array() += sys.ridge;
        sys.density_information += sys.ridge;
        sys.rhs.tail(m) += sys.ridge * state.v;
    }
    return sys;
}

Eigen::VectorXd material_gradient(const InverseProblem& problem, const SolverState& state,
                                  const InversionConfig& config) {
    const MaterialSystem sys = build_material_system(problem, state, config, false);
    Eigen::VectorXd z(sys.rhs.size());
    z << state.w, state.v;
    return sys.H * z - sys.rhs;
}

void solve_material_block(const InverseProblem& problem, SolverState& state, const InversionConfig& config) {
    const int m = problem.voxels();
    MaterialSystem sys = build_material_system(problem, state, config, true);

    if (!(sys.density_information > 0.0))
        throw AnchorMissingError(
            "density block is undetermined: no observed mode constrains v; enable the density ridge "
            "(density_ridge) or provide modes");

    // Jacobi scaling keeps the factorization well conditioned when w and v
    // differ by orders of magnitude.
    Eigen::VectorXd d = sys.H.diagonal().cwiseAbs().cwiseSqrt();
    for (Eigen::Index j = 0; j < d.size(); ++j)
        if (!(d[j] > 0.0)) d[j] = 1.0;
    const Eigen::VectorXd dinv = d.cwiseInverse();
    Eigen::MatrixXd Hs = dinv.asDiagonal() * sys.H * dinv.asDiagonal();
    const Eigen::VectorXd bs = dinv.cwiseProduct(sys.rhs);

    Eigen::LLT<Eigen::MatrixXd> llt(Hs);
    if (llt.info() != Eigen::Success) {
        Hs.diagonal().array() += 1e-12 * Hs.diagonal().sum() / Hs.rows();
        llt.compute(Hs);
        if (llt.info() != Eigen::Success)
            throw RankDeficiencyError("material block normal equations are rank deficient");
    }
    const Eigen::VectorXd z = dinv.cwiseProduct(llt.solve(bs));
    state.w = z.head(m);
    state.v = z.tail(m);

    if (config.clamp_positive) {
        const double w_floor = 1e-6 * config.w_bar;
        const double v_floor = 1e-6 * config.initial_v(m).mean();
        for (int e = 0; e < m; ++e) {
            if (state.w[e] < w_floor) {
                state.w[e] = w_floor;
                ++state.clamp_count;
            }
            if (state.v[e] < v_floor) {
                state.v[e] = v_floor;
                ++state.clamp_count;
            }
        }
    }
}

void dual_update(const InverseProblem& problem, SolverState& state, const InversionConfig& config,
                 const fem::GlobalSystem& system) {
    state.residuals = eigen_residuals(problem, state, system);
    state.y += (config.eta / problem.residual_scale) * state.residuals;
}

// ---------------------------------------------------------------------------

InversionResult run_inversion(const InverseProblem& problem, const InversionConfig& config) {
    config.validate();
    if (problem.modes() == 0)
        throw AnchorMissingError("no observed modes: the density field has no anchor");

    SolverState state = SolverState::initial(problem, config);
    ModeBlockSolver modes;
    fem::GlobalSystem system = assemble(problem, state);
    for (int it = 1; it <= config.max_iters; ++it) {
        modes.solve(problem, state, config, system);
        const Eigen::VectorXd w_old = state.w;
        const Eigen::VectorXd v_old = state.v;
        solve_material_block(problem, state, config);
        system = assemble(problem, state);

        const double obj = objective(problem, state, config, system);
        if (!std::isfinite(obj) || !state.w.allFinite() || !state.v.allFinite()) {
            std::ostringstream msg;
            msg << "inversion diverged at iteration " << it << ": objective " << obj << ", |w| " << state.w.norm()
                << ", |v| " << state.v.norm() << ", |U| " << state.U.norm() << ", y " << state.y.transpose();
            throw DivergenceError(msg.str());
        }
        state.objective_history.push_back(obj);
        dual_update(problem, state, config, system);
        state.max_residual_history.push_back(state.residuals.maxCoeff());
        state.iter = it;

        const double change = std::max(relative_change(state.w, w_old), relative_change(state.v, v_old));
        if (change < config.rel_tol) {
            state.converged = true;
            break;
        }
    }
    InversionResult result;
    result.field.w = state.w;
    result.field.v = state.v;
    result.field.nu = problem.units->nu();
    result.state = std::move(state);
    return result;
}

nlohmann::json result_to_json(const InversionResult& r) {
    auto vec = [](const Eigen::VectorXd& x) { return std::vector<double>(x.data(), x.data() + x.size()); };
    return {{"w", vec(r.state.w)},
            {"v", vec(r.state.v)},
            {"y", vec(r.state.y)},
            {"objective_history", r.state.objective_history},
            {"max_residual_history", r.state.max_residual_history},
            {"residuals", vec(r.state.residuals)},
            {"iterations", r.state.iter},
            {"converged", r.state.converged},
            {"clamp_count", r.state.clamp_count}};
}

}  // namespace vibtomo::inv
