#pragma once

#include <Eigen/Core>

#include "doalign/geometry.hpp"

namespace doalign {

/// Ratio sigma_2 / sigma_1 at or below which the nearest rotation stops
/// being unique.
inline constexpr double kDegenerateSpectrumRatio = 1e-12;

struct ProjectedRotation {
  Rotation rotation;
  /// The returned matrix is still a minimiser, just not the only one.
  bool degenerate_spectrum = false;
};

/// Orthogonal Procrustes projection: the proper rotation minimising
/// ||R - m||_F. When the nearest orthogonal matrix is a reflection, the
/// singular direction with the smallest singular value is flipped, which is
/// optimal among determinant +1 matrices. Throws InvalidRotationError for
/// non-finite input.
ProjectedRotation closest_rotation(const Eigen::Matrix3d& m);

}  // namespace doalign
