#include "doalign/geometry.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace doalign {

namespace {
constexpr double kPi = std::numbers::pi;
}

double deg_to_rad(double deg) { return deg * kPi / 180.0; }
double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

double wrap_angle(double rad) {
  double w = std::remainder(rad, 2.0 * kPi);
  if (w <= -kPi) w = kPi;  // remainder may return exactly -pi
  return w;
}

Rotation::Rotation() : mat_(Eigen::Matrix3d::Identity()) {}

Rotation Rotation::identity() { return Rotation(); }

Rotation Rotation::from_matrix(const Eigen::Matrix3d& m, double tol) {
  const double ortho = (m * m.transpose() - Eigen::Matrix3d::Identity())
                           .cwiseAbs()
                           .maxCoeff();
  const double det = m.determinant();
  if (ortho > tol || std::abs(det - 1.0) > tol) {
    throw InvalidRotationError("matrix is not a rotation: |MM^T - I|max = " +
                               std::to_string(ortho) +
                               ", det = " + std::to_string(det));
  }
  return Rotation(m, Unchecked{});
}

Rotation Rotation::from_euler_zyx(const EulerAngles& e) {
  const double ca = std::cos(e.yaw), sa = std::sin(e.yaw);
  const double cb = std::cos(e.pitch), sb = std::sin(e.pitch);
  const double cg = std::cos(e.roll), sg = std::sin(e.roll);
  Eigen::Matrix3d m;
  m << ca * cb, ca * sb * sg - sa * cg, ca * sb * cg + sa * sg,
       sa * cb, sa * sb * sg + ca * cg, sa * sb * cg - ca * sg,
       -sb, cb * sg, cb * cg;
  return Rotation(m, Unchecked{});
}

EulerAngles Rotation::euler_zyx() const {
  const Eigen::Matrix3d& m = mat_;
  EulerAngles e;
  const double sb = -m(2, 0);
  e.pitch = std::asin(std::clamp(sb, -1.0, 1.0));
  if (std::abs(sb) > 1.0 - 1e-12) {
    // Gimbal lock: only yaw - sign(sb) * roll is observable. Put it all in
    // yaw.
    e.yaw = std::atan2(-m(0, 1), m(1, 1));
    e.roll = 0.0;
  } else {
    e.yaw = std::atan2(m(1, 0), m(0, 0));
    e.roll = std::atan2(m(2, 1), m(2, 2));
  }
  return e;
}

Rotation Rotation::inverse() const {
  return Rotation(mat_.transpose(), Unchecked{});
}

Rotation Rotation::operator*(const Rotation& rhs) const {
  return Rotation(mat_ * rhs.mat_, Unchecked{});
}

double rotation_distance(const Rotation& a, const Rotation& b) {
  const double tr = (a.matrix().transpose() * b.matrix()).trace();
  return std::acos(std::clamp((tr - 1.0) / 2.0, -1.0, 1.0));
}

Eigen::Vector3d transform_point(const Pose& pose, const Eigen::Vector3d& p) {
  return pose.rotation * p + pose.translation;
}

Pose invert_pose(const Pose& pose) {
  Pose inv;
  inv.rotation = pose.rotation.inverse();
  inv.translation = -(inv.rotation * pose.translation);
  inv.from = pose.to;
  inv.to = pose.from;
  return inv;
}

Eigen::Vector3d doa_to_unit_vector(double azimuth, double elevation) {
  const double caz = std::cos(azimuth), saz = std::sin(azimuth);
  const double cel = std::cos(elevation), sel = std::sin(elevation);
  return {caz * cel, saz * cel, sel};
}

Eigen::Vector3d doa_to_unit_vector(const DoaMeasurement& doa) {
  return doa_to_unit_vector(doa.azimuth, doa.elevation);
}

std::pair<double, double> unit_vector_to_doa(const Eigen::Vector3d& v,
                                             double eps_len) {
  const double n = v.norm();
  if (!(n > eps_len)) {
    throw DegenerateVectorError("vector norm " + std::to_string(n) +
                                " too small to define a direction");
  }
  double az = std::atan2(v.y(), v.x());
  if (az <= -kPi) az = kPi;
  const double el = std::asin(std::clamp(v.z() / n, -1.0, 1.0));
  return {az, el};
}

std::pair<double, double> canonicalize_doa(double azimuth, double elevation) {
  return unit_vector_to_doa(doa_to_unit_vector(azimuth, elevation), 0.5);
}

}  // namespace doalign
