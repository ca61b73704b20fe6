#pragma once

#include <Eigen/Core>
#include <utility>

#include "doalign/errors.hpp"

namespace doalign {

/// Orthonormality / determinant tolerance applied when a raw matrix is
/// promoted to a Rotation.
inline constexpr double kRotationTol = 1e-9;

/// Below this length a vector no longer defines a usable direction.
inline constexpr double kDegenerateLength = 1e-12;

double deg_to_rad(double deg);
double rad_to_deg(double rad);

/// Wraps an angle to the half-open interval (-pi, pi].
double wrap_angle(double rad);

/// Reference frames used throughout: the shared global frame, an agent's
/// drifted inertial-navigation frame, the same frame re-centred on the
/// vehicle (axes parallel to the drifted one), and the body-fixed frame the
/// antenna array is rigidly mounted in.
enum class FrameKind {
  kGlobal,
  kLocalIns,
  kBodyCentredIns,
  kBodyFixed,
};

struct FrameId {
  FrameKind kind = FrameKind::kGlobal;
  char agent = 0;  // 0 for the global frame, otherwise 'A', 'B', 'C'

  friend bool operator==(const FrameId&, const FrameId&) = default;
};

inline FrameId global_frame() { return {FrameKind::kGlobal, 0}; }
inline FrameId local_ins_frame(char agent) {
  return {FrameKind::kLocalIns, agent};
}
inline FrameId body_centred_frame(char agent) {
  return {FrameKind::kBodyCentredIns, agent};
}
inline FrameId body_fixed_frame(char agent) {
  return {FrameKind::kBodyFixed, agent};
}

/// Intrinsic Z-Y-X Euler angles in radians: yaw about z, then pitch about
/// the rotated y, then roll about the rotated x.
struct EulerAngles {
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;
};

/// Proper rotation matrix. Construction validates orthonormality and
/// det = +1, so a value of this type is always a member of SO(3).
class Rotation {
 public:
  Rotation();

  static Rotation identity();

  /// Validates `m` against SO(3) membership within `tol` and returns it as a
  /// Rotation. Throws InvalidRotationError otherwise. The matrix is stored
  /// as given; it is not re-orthonormalised.
  static Rotation from_matrix(const Eigen::Matrix3d& m,
                              double tol = kRotationTol);

  static Rotation from_euler_zyx(const EulerAngles& e);

  /// Decomposes into intrinsic Z-Y-X angles. At pitch = +-pi/2 the yaw/roll
  /// split is not unique; roll is reported as zero there.
  EulerAngles euler_zyx() const;

  const Eigen::Matrix3d& matrix() const { return mat_; }

  Rotation inverse() const;

  Rotation operator*(const Rotation& rhs) const;
  Eigen::Vector3d operator*(const Eigen::Vector3d& v) const { return mat_ * v; }

 private:
  struct Unchecked {};
  Rotation(const Eigen::Matrix3d& m, Unchecked) : mat_(m) {}

  Eigen::Matrix3d mat_;
};

/// Geodesic distance on SO(3) in radians.
double rotation_distance(const Rotation& a, const Rotation& b);

/// Rigid transform taking coordinates of `from` into coordinates of `to`:
/// p_to = R p_from + t.
struct Pose {
  Rotation rotation;
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  FrameId from;
  FrameId to;
};

Eigen::Vector3d transform_point(const Pose& pose, const Eigen::Vector3d& p);

/// Inverse transform: p_from = R^T (p_to - t), with the frame tags swapped.
Pose invert_pose(const Pose& pose);

/// Direction of arrival: azimuth in (-pi, pi] measured in the x-y plane from
/// +x toward +y, elevation in [-pi/2, pi/2] from the x-y plane toward +z.
struct DoaMeasurement {
  double azimuth = 0.0;
  double elevation = 0.0;
  FrameId frame;
  int k = 0;  // epoch index
};

/// Unit vector [cos(az)cos(el), sin(az)cos(el), sin(el)].
Eigen::Vector3d doa_to_unit_vector(double azimuth, double elevation);
Eigen::Vector3d doa_to_unit_vector(const DoaMeasurement& doa);

/// Inverse of doa_to_unit_vector for any vector with norm > eps_len.
/// Returns {azimuth, elevation} in the canonical ranges. Throws
/// DegenerateVectorError for shorter vectors.
std::pair<double, double> unit_vector_to_doa(
    const Eigen::Vector3d& v, double eps_len = kDegenerateLength);

/// Round-trips a (possibly out-of-range) angle pair through its direction
/// vector, yielding the canonical representative of the same direction.
std::pair<double, double> canonicalize_doa(double azimuth, double elevation);

}  // namespace doalign
