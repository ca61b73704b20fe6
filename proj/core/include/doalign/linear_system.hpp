#pragma once

#include <Eigen/Core>
#include <vector>

#include "doalign/geometry.hpp"

namespace doalign {

/// Number of unknowns in the flattened pose vector: nine rotation entries in
/// row-major order followed by the translation.
inline constexpr int kPoseVectorSize = 12;

using PoseVector = Eigen::Matrix<double, kPoseVectorSize, 1>;

/// One synchronised observation: broadcaster position in the global frame,
/// receiver position in its own drifted INS frame, and the direction of
/// arrival of the broadcast at the receiver, expressed in that INS frame.
struct MeasurementEpoch {
  int k = 0;
  Eigen::Vector3d broadcaster_global = Eigen::Vector3d::Zero();
  Eigen::Vector3d receiver_local = Eigen::Vector3d::Zero();
  DoaMeasurement doa;
};

/// Homogeneous collinearity equations stacked over epochs, two rows each, in
/// the unknowns [r11 .. r33, t1, t2, t3] of the global-to-INS transform.
struct LinearSystem {
  Eigen::MatrixXd lhs;  // 2K x 12
  Eigen::VectorXd rhs;  // 2K
  int epoch_count = 0;
};

PoseVector pack_pose(const Rotation& rotation, const Eigen::Vector3d& t);
PoseVector pack_pose_raw(const Eigen::Matrix3d& m, const Eigen::Vector3d& t);

/// Splits a pose vector into its (unprojected) rotation block and
/// translation.
struct PoseVectorParts {
  Eigen::Matrix3d rotation_block;
  Eigen::Vector3d translation;
};
PoseVectorParts split_pose_vector(const PoseVector& psi);

/// Builds the 2K x 12 system from the epochs. Throws EmptyInputError when
/// the list is empty.
LinearSystem assemble(const std::vector<MeasurementEpoch>& epochs);

/// Re-expresses the system with the receiver positions shifted by -t_guess,
/// which only touches the right-hand side. A solution of the shifted system
/// estimates t - t_guess.
void apply_shift(LinearSystem& system, const Eigen::Vector3d& t_guess);

/// Multiplies the translation columns by s > 0 so that the solved
/// translation comes out as t / s. Improves conditioning when the drift
/// translation dwarfs the rotation entries. Throws NonPositiveScaleError.
void apply_translation_scaling(LinearSystem& system, double s);

struct LsSolution {
  PoseVector psi = PoseVector::Zero();
  double residual_norm = 0.0;
  int rank = 0;
  bool rank_deficient = false;
  Eigen::VectorXd singular_values;
};

/// Minimum-norm least squares solution via SVD. Requires at least six
/// epochs (twelve rows); throws ConfigError below that. Rank counts singular
/// values above 1e-10 of the largest; a deficient system is still solved and
/// flagged.
LsSolution solve_ls(const LinearSystem& system);

struct PolishedPose {
  Rotation rotation;
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  double residual_norm = 0.0;
  int iterations = 0;
};

/// Gauss-Newton descent of ||lhs psi(R, t) - rhs|| over SO(3) x R^3 with
/// rotation steps taken in the tangent space, started from the given pose.
/// Where the start is already near a consistent pose this converges
/// quadratically, so exact data is recovered to machine precision; steps
/// that fail to reduce the residual are halved and the iteration stops once
/// no progress is possible. Throws ConfigError when the system does not
/// have twelve columns.
PolishedPose polish_pose(const LinearSystem& system,
                         const Rotation& initial_rotation,
                         const Eigen::Vector3d& initial_translation,
                         int max_iterations = 20);

}  // namespace doalign
