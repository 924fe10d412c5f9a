#pragma once

#include <span>

#include <Eigen/Core>

namespace vibtomo::obs {

/// Affine camera p = A X + b, A in pixels per meter. Image y points down, so
/// the viewing direction is a1 x a2 (row cross product).
struct ProjectionModel {
    Eigen::Matrix<double, 2, 3> A = Eigen::Matrix<double, 2, 3>::Zero();
    Eigen::Vector2d b = Eigen::Vector2d::Zero();

    Eigen::Vector2d project(const Eigen::Vector3d& X) const { return A * X + b; }
    Eigen::Vector3d view_direction() const;
    int rank() const;
};

/// Camera looking along `view` with `up` projecting to image-up, scaled to
/// `pixels_per_meter`.
ProjectionModel look_along(const Eigen::Vector3d& view, const Eigen::Vector3d& up,
                           double pixels_per_meter,
                           const Eigen::Vector2d& offset = Eigen::Vector2d::Zero());

/// Least-squares affine fit of A, b from >= 4 non-coplanar correspondences.
/// Throws RankDeficiencyError naming the direction without spread.
ProjectionModel fit_projection(std::span<const Eigen::Vector3d> points,
                               std::span<const Eigen::Vector2d> pixels);

}  // namespace vibtomo::obs
