#pragma once

#include <array>
#include <span>

#include <Eigen/Core>

namespace vibtomo::fem {

using Hex8Matrix = Eigen::Matrix<double, 24, 24>;
using Tri3Matrix = Eigen::Matrix<double, 3, 3>;

/// Isotropic linear-elastic constitutive matrix (Voigt order xx, yy, zz, yz, xz, xy;
/// engineering shear strains).
Eigen::Matrix<double, 6, 6> isotropic_elasticity(double youngs, double nu);

/// Hex8 stiffness at Young's modulus E via 2x2x2 Gauss quadrature. DOFs are
/// ordered node-major (x, y, z per node), nodes in the usual counter-clockwise
/// bottom-then-top order. Throws MeshQualityError on a non-positive Jacobian.
Hex8Matrix hex8_stiffness(std::span<const Eigen::Vector3d, 8> nodes, double youngs, double nu);

/// Consistent hex8 mass matrix at density rho (2x2x2 Gauss, exact for trilinear
/// geometry of parallelepipeds).
Hex8Matrix hex8_mass(std::span<const Eigen::Vector3d, 8> nodes, double rho);

/// Scalar membrane stiffness: thickness * tension * integral of grad N_i . grad N_j
/// over the triangle projected onto the xy plane.
Tri3Matrix tri3_membrane_stiffness(std::span<const Eigen::Vector3d, 3> nodes, double tension,
                                   double thickness = 1.0);

/// Consistent scalar mass: thickness * rho * A / 12 * (1 + delta_ij).
Tri3Matrix tri3_membrane_mass(std::span<const Eigen::Vector3d, 3> nodes, double rho,
                              double thickness = 1.0);

}  // namespace vibtomo::fem
