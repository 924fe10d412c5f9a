#include "vibtomo/modal/transient.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "vibtomo/error.hpp"
#include "vibtomo/parallel.hpp"

namespace vibtomo::modal {

RayleighDamping rayleigh_from_ratios(DampingPoint p1, DampingPoint p2) {
    if (!(p1.freq_hz > 0.0) || !(p2.freq_hz > 0.0))
        throw ValidationError("damping frequencies must be positive");
    if (p1.zeta < 0.0 || p2.zeta < 0.0) throw ValidationError("damping ratios must be >= 0");
    if (p1.freq_hz == p2.freq_hz)
        throw ValidationError("damping frequencies must be distinct (singular 2x2 system)");
    const double w1 = 2.0 * std::numbers::pi * p1.freq_hz;
    const double w2 = 2.0 * std::numbers::pi * p2.freq_hz;
    Eigen::Matrix2d A;
    A << 1.0 / (2.0 * w1), w1 / 2.0, 1.0 / (2.0 * w2), w2 / 2.0;
    const Eigen::Vector2d sol = A.fullPivLu().solve(Eigen::Vector2d(p1.zeta, p2.zeta));
    return {sol[0], sol[1]};
}

int frame_count(double fps, double duration) {
    if (!(fps > 0.0)) throw ValidationError("fps must be positive");
    const double t = std::round(duration * fps);
    if (!(t >= 2.0)) throw ValidationError("simulation must contain at least 2 frames");
    return static_cast<int>(t);
}

Eigen::VectorXd project_onto_modes(const ModalBasis& basis, const fem::SparseMatrix& M,
                                   const Eigen::VectorXd& x) {
    if (x.size() != basis.dof_count()) throw ShapeError("vector length does not match basis");
    return basis.modes.transpose() * (M * x);
}

ModalTrajectory evolve_modes(const ModalBasis& basis, const RayleighDamping& damping,
                             const Eigen::VectorXd& q0, const Eigen::VectorXd& qdot0, double fps,
                             int frames) {
    const int k = basis.count();
    if (q0.size() != k || qdot0.size() != k) throw ShapeError("initial modal state has wrong size");
    if (!(fps > 0.0)) throw ValidationError("fps must be positive");
    if (damping.alpha < 0.0 || damping.beta < 0.0)
        throw ValidationError("Rayleigh coefficients must be non-negative");

    const Eigen::VectorXd omega = basis.omegas();
    for (int i = 0; i < k; ++i) {
        if (!(omega[i] > 0.0)) throw UnsupportedDampingError("modes with zero frequency cannot be evolved");
        const double zeta = damping.ratio(omega[i]);
        if (zeta >= 1.0) {
            std::ostringstream msg;
            msg << "mode " << i << " at " << omega[i] / (2.0 * std::numbers::pi)
                << " Hz is overdamped (zeta = " << zeta << ")";
            throw UnsupportedDampingError(msg.str());
        }
    }

    ModalTrajectory out{Eigen::MatrixXd(frames, k), Eigen::MatrixXd(frames, k), fps};
    parallel_for(static_cast<std::size_t>(k), [&](std::size_t idx) {
        const int i = static_cast<int>(idx);
        const double w = omega[i];
        const double zeta = damping.ratio(w);
        const double wd = w * std::sqrt(1.0 - zeta * zeta);
        const double decay = zeta * w;
        const double a = q0[i];
        const double c = (qdot0[i] + decay * a) / wd;
        for (int j = 0; j < frames; ++j) {
            const double t = j / fps;
            const double env = std::exp(-decay * t);
            const double cs = std::cos(wd * t), sn = std::sin(wd * t);
            out.q(j, i) = env * (a * cs + c * sn);
            out.qdot(j, i) = env * ((c * wd - decay * a) * cs - (a * wd + decay * c) * sn);
        }
    });
    return out;
}

DisplacementSeries simulate_transient(const ModalBasis& basis, const fem::SparseMatrix& M,
                                      const RayleighDamping& damping, const Eigen::VectorXd& d0,
                                      const std::optional<Eigen::VectorXd>& v0, double fps,
                                      double duration) {
    const int T = frame_count(fps, duration);
    const Eigen::VectorXd q0 = project_onto_modes(basis, M, d0);
    const Eigen::VectorXd qd0 = v0 ? project_onto_modes(basis, M, *v0)
                                   : Eigen::VectorXd::Zero(basis.count()).eval();
    const ModalTrajectory traj = evolve_modes(basis, damping, q0, qd0, fps, T);
    return {traj.q * basis.modes.transpose(), fps};
}

Eigen::VectorXd pluck_shape(const fem::Mesh& mesh, const fem::SparseMatrix& K, int vertex,
                            const Eigen::Vector3d& target) {
    if (vertex < 0 || vertex >= mesh.vertex_count()) throw ValidationError("pluck vertex out of range");
    if (mesh.is_fixed(vertex)) throw ValidationError("cannot pluck a fixed vertex");
    if (K.rows() != mesh.free_dof_count()) throw ShapeError("stiffness size does not match mesh");

    Eigen::SimplicialLDLT<fem::SparseMatrix> solver(K);
    if (solver.info() != Eigen::Success)
        throw DegenerateSystemError("stiffness matrix is singular; pluck needs a constrained mesh");

    const int dpv = mesh.dof_per_vertex();
    const int n = mesh.free_dof_count();
    Eigen::MatrixXd loads = Eigen::MatrixXd::Zero(n, dpv);
    for (int c = 0; c < dpv; ++c) loads(mesh.dof(vertex, c), c) = 1.0;
    const Eigen::MatrixXd responses = solver.solve(loads);

    // Local compliance block: displacement of the plucked vertex per unit load.
    Eigen::MatrixXd local(dpv, dpv);
    for (int r = 0; r < dpv; ++r) local.row(r) = responses.row(mesh.dof(vertex, r));
    const Eigen::VectorXd wanted = dpv == 3 ? Eigen::VectorXd(target) : Eigen::VectorXd::Constant(1, target.z());
    const Eigen::VectorXd force = local.ldlt().solve(wanted);
    return responses * force;
}

}  // namespace vibtomo::modal
