#include "vibtomo/modal/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include "vibtomo/error.hpp"

namespace vibtomo::modal {
namespace {

using fem::SparseMatrix;

void fix_signs(Eigen::MatrixXd& modes) {
    for (Eigen::Index j = 0; j < modes.cols(); ++j) {
        auto col = modes.col(j);
        const double scale = col.cwiseAbs().maxCoeff();
        for (Eigen::Index i = 0; i < col.size(); ++i) {
            if (std::abs(col[i]) > 1e-6 * scale) {
                if (col[i] < 0.0) col = -col;
                break;
            }
        }
    }
}

ModalBasis solve_dense(const fem::GlobalSystem& sys, int count) {
    Eigen::MatrixXd K = Eigen::MatrixXd(sys.K);
    Eigen::MatrixXd M = Eigen::MatrixXd(sys.M);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(
        K, M, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
    if (solver.info() != Eigen::Success) {
        throw DegenerateSystemError("dense generalized eigensolve failed (is M positive definite?)");
    }
    return {solver.eigenvectors().leftCols(count), solver.eigenvalues().head(count)};
}

// Block Lanczos on the shift-inverted pencil with full M-reorthogonalization
// and Rayleigh-Ritz extraction against K itself.
class ShiftInvertLanczos {
public:
    ShiftInvertLanczos(const fem::GlobalSystem& sys, int count, const EigenOptions& opt)
        : sys_(sys), n_(sys.size()), k_(count), opt_(opt), rng_(opt.seed) {
        const double trace_k = sys.K.diagonal().sum();
        const double trace_m = sys.M.diagonal().sum();
        sigma_ = -1e-4 * std::abs(trace_k) / trace_m;
        if (!(sigma_ < 0.0)) sigma_ = -1e-8;

        SparseMatrix shifted = sys.K - sigma_ * sys.M;
        factor_.compute(shifted);
        if (factor_.info() != Eigen::Success) {
            throw DegenerateSystemError("factorization of K - sigma M failed; M may be singular");
        }
        max_dim_ = opt.max_subspace > 0 ? opt.max_subspace : std::max(20 * k_, 2 * k_ + 100);
        max_dim_ = std::min(max_dim_, n_);
        block_ = std::clamp(opt.block_size, 1, max_dim_);
    }

    ModalBasis run() {
        V_.resize(n_, max_dim_);
        MV_.resize(n_, max_dim_);
        KV_.resize(n_, max_dim_);
        dim_ = 0;

        const int min_dim = std::min(n_, k_ + block_);
        int next_check = min_dim;
        int restarts = 0;
        Eigen::MatrixXd next = random_block(block_);
        while (true) {
            const int added = append(next);
            const bool exhausted = dim_ >= max_dim_;
            if (dim_ >= next_check || exhausted) {
                ModalBasis ritz;
                if (rayleigh_ritz(ritz) || dim_ >= n_) return ritz;
                if (exhausted) {
                    if (restarts++ >= opt_.max_restarts) {
                        std::ostringstream msg;
                        msg << "shift-invert eigensolver did not converge " << k_
                            << " pairs within a subspace of " << max_dim_ << " after "
                            << opt_.max_restarts << " restarts";
                        throw NumericalError(msg.str());
                    }
                    next = thick_restart();
                    next_check = std::min(max_dim_, dim_ + block_);
                    continue;
                }
                next_check = std::max(dim_ + block_, static_cast<int>(1.15 * dim_));
            }
            const int cols = std::min(block_, max_dim_ - dim_);
            if (added == 0) {
                next = random_block(cols);
                continue;
            }
            const int use = std::min(added, cols);
            Eigen::MatrixXd rhs = MV_.middleCols(dim_ - added, use);
            Eigen::MatrixXd solved = factor_.solve(rhs);
            next.resize(n_, cols);
            next.leftCols(use) = solved;
            if (use < cols) next.rightCols(cols - use) = random_block(cols - use);
        }
    }

private:
    Eigen::MatrixXd random_block(int cols) {
        std::normal_distribution<double> gauss;
        Eigen::MatrixXd X(n_, cols);
        for (Eigen::Index j = 0; j < X.cols(); ++j)
            for (Eigen::Index i = 0; i < X.rows(); ++i) X(i, j) = gauss(rng_);
        return X;
    }

    // M-orthogonalizes the columns of X against the basis and each other and
    // appends the survivors; returns how many were appended.
    int append(Eigen::MatrixXd X) {
        int added = 0;
        for (Eigen::Index j = 0; j < X.cols() && dim_ < max_dim_; ++j) {
            Eigen::VectorXd x = X.col(j);
            const double original = std::sqrt(std::max(0.0, x.dot(sys_.M * x)));
            if (!(original > 0.0)) continue;
            Eigen::VectorXd Mx;
            for (int pass = 0; pass < 2; ++pass) {
                if (dim_ > 0) {
                    Eigen::VectorXd coeff = MV_.leftCols(dim_).transpose() * x;
                    x.noalias() -= V_.leftCols(dim_) * coeff;
                }
            }
            Mx = sys_.M * x;
            const double norm = std::sqrt(std::max(0.0, x.dot(Mx)));
            if (norm <= 1e-10 * original) continue;
            V_.col(dim_) = x / norm;
            MV_.col(dim_) = Mx / norm;
            KV_.col(dim_) = sys_.K * V_.col(dim_);
            ++dim_;
            ++added;
        }
        return added;
    }

    // Collapses the basis onto its lowest Ritz vectors and restarts the block
    // recurrence from the shift-inverted operator applied to the wanted ones.
    // Ritz vectors of K are not Krylov Ritz vectors of the operator, so the
    // previous last block is not a valid continuation.
    Eigen::MatrixXd thick_restart() {
        int keep = std::max(std::min(k_, dim_), std::min(max_dim_ / 2, max_dim_ - 2 * block_));
        keep = std::min(keep, dim_);
        const Eigen::MatrixXd Y = ritz_vectors_.leftCols(keep);
        Eigen::MatrixXd V = V_.leftCols(dim_) * Y;
        Eigen::MatrixXd MV = MV_.leftCols(dim_) * Y;
        Eigen::MatrixXd KV = KV_.leftCols(dim_) * Y;
        V_.leftCols(keep) = V;
        MV_.leftCols(keep) = MV;
        KV_.leftCols(keep) = KV;
        dim_ = keep;
        const int seeds = std::min(keep, std::max(block_, k_));
        return factor_.solve(MV_.leftCols(seeds));
    }

    bool rayleigh_ritz(ModalBasis& out) {
        Eigen::MatrixXd T = V_.leftCols(dim_).transpose() * KV_.leftCols(dim_);
        T = 0.5 * (T + T.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(T);
        ritz_vectors_ = eig.eigenvectors();
        const int take = std::min(k_, dim_);
        Eigen::MatrixXd X = V_.leftCols(dim_) * eig.eigenvectors().leftCols(take);
        Eigen::VectorXd lambda = eig.eigenvalues().head(take);

        bool converged = take == k_;
        for (int i = 0; i < take; ++i) {
            Eigen::VectorXd x = X.col(i);
            Eigen::VectorXd Mx = sys_.M * x;
            const double mnorm = std::sqrt(x.dot(Mx));
            X.col(i) /= mnorm;
            Mx /= mnorm;
            Eigen::VectorXd r = sys_.K * X.col(i) - lambda[i] * Mx;
            const double denom = std::max(std::abs(lambda[i]), std::abs(sigma_)) * Mx.norm();
            if (r.norm() > opt_.tolerance * denom) converged = false;
        }
        out = {std::move(X), std::move(lambda)};
        return converged;
    }

    const fem::GlobalSystem& sys_;
    int n_;
    int k_;
    EigenOptions opt_;
    std::mt19937_64 rng_;
    double sigma_ = 0.0;
    Eigen::SimplicialLDLT<SparseMatrix> factor_;
    int max_dim_ = 0;
    int block_ = 1;
    int dim_ = 0;
    Eigen::MatrixXd V_, MV_, KV_;
    Eigen::MatrixXd ritz_vectors_;
};

}  // namespace

Eigen::VectorXd ModalBasis::omegas() const {
    return eigenvalues.array().max(0.0).sqrt().matrix();
}

Eigen::VectorXd ModalBasis::frequencies_hz() const {
    return omegas() / (2.0 * std::numbers::pi);
}

ModalBasis ModalBasis::truncated(int k) const {
    k = std::clamp(k, 0, count());
    return {modes.leftCols(k), eigenvalues.head(k)};
}

double relative_residual(const fem::GlobalSystem& system, const Eigen::VectorXd& u,
                         double eigenvalue) {
    Eigen::VectorXd Mu = system.M * u;
    Eigen::VectorXd r = system.K * u - eigenvalue * Mu;
    return r.norm() / (std::abs(eigenvalue) * Mu.norm());
}

ModalBasis solve_modes(const fem::GlobalSystem& system, int count,
                       std::optional<double> freq_ceiling_hz, const EigenOptions& options) {
    const int n = system.size();
    if (n == 0) throw DegenerateSystemError("system has no free degrees of freedom");
    if (count < 1) throw ValidationError("mode count must be at least 1");
    if (count > n) {
        std::ostringstream msg;
        msg << "requested " << count << " modes but the system has only " << n << " DOFs";
        throw ValidationError(msg.str());
    }

    const bool dense = options.method == EigenMethod::Dense ||
                       (options.method == EigenMethod::Auto && n <= options.dense_threshold);
    ModalBasis basis = dense ? solve_dense(system, count)
                             : ShiftInvertLanczos(system, count, options).run();
    fix_signs(basis.modes);

    if (freq_ceiling_hz) {
        const Eigen::VectorXd f = basis.frequencies_hz();
        int keep = 0;
        while (keep < f.size() && f[keep] <= *freq_ceiling_hz) ++keep;
        basis = basis.truncated(keep);
    }
    return basis;
}

}  // namespace vibtomo::modal
