#include "vibtomo/fem/elements.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "vibtomo/error.hpp"

namespace vibtomo::fem {
namespace {

constexpr double kNodeSign[8][3] = {{-1, -1, -1}, {1, -1, -1}, {1, 1, -1}, {-1, 1, -1},
                                    {-1, -1, 1},  {1, -1, 1},  {1, 1, 1},  {-1, 1, 1}};

const double kGauss = 1.0 / std::sqrt(3.0);

struct Hex8Point {
    Eigen::Matrix<double, 8, 1> N;
    Eigen::Matrix<double, 8, 3> dN;  // physical derivatives
    double detJ;
};

Hex8Point evaluate(std::span<const Eigen::Vector3d, 8> nodes, double xi, double eta, double zeta) {
    Hex8Point p;
    Eigen::Matrix<double, 8, 3> dNref;
    for (int a = 0; a < 8; ++a) {
        const double sx = kNodeSign[a][0], sy = kNodeSign[a][1], sz = kNodeSign[a][2];
        const double fx = 1.0 + sx * xi, fy = 1.0 + sy * eta, fz = 1.0 + sz * zeta;
        p.N[a] = 0.125 * fx * fy * fz;
        dNref(a, 0) = 0.125 * sx * fy * fz;
        dNref(a, 1) = 0.125 * fx * sy * fz;
        dNref(a, 2) = 0.125 * fx * fy * sz;
    }
    Eigen::Matrix3d J = Eigen::Matrix3d::Zero();  // J(i, j) = d x_j / d xi_i
    for (int a = 0; a < 8; ++a) J += dNref.row(a).transpose() * nodes[a].transpose();
    p.detJ = J.determinant();
    if (!(p.detJ > 0.0)) {
        std::ostringstream msg;
        msg << "inverted or degenerate hex8 element (det J = " << p.detJ << ")";
        throw MeshQualityError(msg.str());
    }
    p.dN = dNref * J.inverse().transpose();
    return p;
}

template <typename F>
void for_each_gauss_point(F&& f) {
    for (int k = 0; k < 2; ++k)
        for (int j = 0; j < 2; ++j)
            for (int i = 0; i < 2; ++i)
                f((i ? 1 : -1) * kGauss, (j ? 1 : -1) * kGauss, (k ? 1 : -1) * kGauss);
}

double signed_area_xy(std::span<const Eigen::Vector3d, 3> n) {
    return 0.5 * ((n[1].x() - n[0].x()) * (n[2].y() - n[0].y()) -
                  (n[2].x() - n[0].x()) * (n[1].y() - n[0].y()));
}

}  // namespace

Eigen::Matrix<double, 6, 6> isotropic_elasticity(double youngs, double nu) {
    const double lambda = youngs * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    const double mu = youngs / (2.0 * (1.0 + nu));
    Eigen::Matrix<double, 6, 6> D = Eigen::Matrix<double, 6, 6>::Zero();
    D.topLeftCorner<3, 3>().setConstant(lambda);
    D.topLeftCorner<3, 3>().diagonal().array() += 2.0 * mu;
    D.bottomRightCorner<3, 3>().diagonal().setConstant(mu);
    return D;
}

Hex8Matrix hex8_stiffness(std::span<const Eigen::Vector3d, 8> nodes, double youngs, double nu) {
    const auto D = isotropic_elasticity(youngs, nu);
    Hex8Matrix K = Hex8Matrix::Zero();
    for_each_gauss_point([&](double xi, double eta, double zeta) {
        const Hex8Point p = evaluate(nodes, xi, eta, zeta);
        Eigen::Matrix<double, 6, 24> B = Eigen::Matrix<double, 6, 24>::Zero();
        for (int a = 0; a < 8; ++a) {
            const double dx = p.dN(a, 0), dy = p.dN(a, 1), dz = p.dN(a, 2);
            const int c = 3 * a;
            B(0, c) = dx;
            B(1, c + 1) = dy;
            B(2, c + 2) = dz;
            B(3, c + 1) = dz;
            B(3, c + 2) = dy;
            B(4, c) = dz;
            B(4, c + 2) = dx;
            B(5, c) = dy;
            B(5, c + 1) = dx;
        }
        K.noalias() += B.transpose() * D * B * p.detJ;
    });
    // Symmetrize away rounding from the triple product.
    return 0.5 * (K + K.transpose());
}

Hex8Matrix hex8_mass(std::span<const Eigen::Vector3d, 8> nodes, double rho) {
    Eigen::Matrix<double, 8, 8> scalar = Eigen::Matrix<double, 8, 8>::Zero();
    for_each_gauss_point([&](double xi, double eta, double zeta) {
        const Hex8Point p = evaluate(nodes, xi, eta, zeta);
        scalar.noalias() += p.N * p.N.transpose() * (rho * p.detJ);
    });
    Hex8Matrix M = Hex8Matrix::Zero();
    for (int a = 0; a < 8; ++a)
        for (int b = 0; b < 8; ++b)
            for (int c = 0; c < 3; ++c) M(3 * a + c, 3 * b + c) = scalar(a, b);
    return M;
}

Tri3Matrix tri3_membrane_stiffness(std::span<const Eigen::Vector3d, 3> nodes, double tension,
                                   double thickness) {
    const double area = signed_area_xy(nodes);
    if (!(area > 0.0)) throw MeshQualityError("inverted or degenerate tri3 element");
    Eigen::Matrix<double, 2, 3> G;
    for (int a = 0; a < 3; ++a) {
        const auto& p1 = nodes[(a + 1) % 3];
        const auto& p2 = nodes[(a + 2) % 3];
        G(0, a) = (p1.y() - p2.y()) / (2.0 * area);
        G(1, a) = (p2.x() - p1.x()) / (2.0 * area);
    }
    return thickness * tension * area * G.transpose() * G;
}

Tri3Matrix tri3_membrane_mass(std::span<const Eigen::Vector3d, 3> nodes, double rho,
                              double thickness) {
    const double area = signed_area_xy(nodes);
    if (!(area > 0.0)) throw MeshQualityError("inverted or degenerate tri3 element");
    Tri3Matrix M = Tri3Matrix::Constant(1.0);
    M.diagonal().setConstant(2.0);
    return (thickness * rho * area / 12.0) * M;
}

}  // namespace vibtomo::fem
