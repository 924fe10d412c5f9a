#include "vibtomo/observation/projection.hpp"

#include <sstream>

#include <Eigen/Dense>

#include "vibtomo/error.hpp"

namespace vibtomo::obs {

Eigen::Vector3d ProjectionModel::view_direction() const {
    const Eigen::Vector3d a1 = A.row(0).transpose();
    const Eigen::Vector3d a2 = A.row(1).transpose();
    return a1.cross(a2).normalized();
}

int ProjectionModel::rank() const {
    Eigen::JacobiSVD<Eigen::Matrix<double, 2, 3>> svd(A);
    const auto s = svd.singularValues();
    if (s[0] == 0.0) return 0;
    return s[1] > 1e-12 * s[0] ? 2 : 1;
}

ProjectionModel look_along(const Eigen::Vector3d& view, const Eigen::Vector3d& up,
                           double pixels_per_meter, const Eigen::Vector2d& offset) {
    const Eigen::Vector3d f = view.normalized();
    const Eigen::Vector3d right = f.cross(up);
    if (right.norm() < 1e-12) throw ValidationError("camera up vector is parallel to the view");
    const Eigen::Vector3d r = right.normalized();
    const Eigen::Vector3d down = f.cross(r);
    ProjectionModel cam;
    cam.A.row(0) = pixels_per_meter * r.transpose();
    cam.A.row(1) = pixels_per_meter * down.transpose();
    cam.b = offset;
    return cam;
}

ProjectionModel fit_projection(std::span<const Eigen::Vector3d> points,
                               std::span<const Eigen::Vector2d> pixels) {
    if (points.size() != pixels.size())
        throw ShapeError("point and pixel correspondence counts differ");
    if (points.size() < 4) throw ValidationError("affine camera fit needs at least 4 correspondences");

    const auto count = static_cast<Eigen::Index>(points.size());
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const auto& p : points) mean += p;
    mean /= static_cast<double>(count);

    Eigen::MatrixXd centered(count, 3);
    for (Eigen::Index i = 0; i < count; ++i) centered.row(i) = (points[i] - mean).transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> spread(centered, Eigen::ComputeFullV);
    const auto s = spread.singularValues();
    if (!(s[2] > 1e-9 * s[0])) {
        const Eigen::Vector3d dir = spread.matrixV().col(2);
        std::ostringstream msg;
        msg << "reference points are coplanar: no spread along (" << dir.x() << ", " << dir.y()
            << ", " << dir.z() << ")";
        throw RankDeficiencyError(msg.str());
    }

    Eigen::MatrixXd design(count, 4);
    Eigen::MatrixXd rhs(count, 2);
    for (Eigen::Index i = 0; i < count; ++i) {
        design.row(i) << centered.row(i), 1.0;
        rhs.row(i) = pixels[i].transpose();
    }
    const Eigen::MatrixXd sol = design.colPivHouseholderQr().solve(rhs);  // 4 x 2
    ProjectionModel cam;
    cam.A = sol.topRows(3).transpose();
    cam.b = sol.row(3).transpose() - cam.A * mean;
    return cam;
}

}  // namespace vibtomo::obs
