#include "doalign/procrustes.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include "doalign/errors.hpp"

namespace doalign {

ProjectedRotation closest_rotation(const Eigen::Matrix3d& m) {
  if (!m.allFinite()) {
    throw InvalidRotationError(
        "closest_rotation: matrix has non-finite entries");
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d& u = svd.matrixU();
  const Eigen::Matrix3d& v = svd.matrixV();
  Eigen::Vector3d flip = Eigen::Vector3d::Ones();
  if ((u * v.transpose()).determinant() < 0.0) flip(2) = -1.0;

  ProjectedRotation out;
  out.rotation =
      Rotation::from_matrix(u * flip.asDiagonal() * v.transpose());
  out.degenerate_spectrum = svd.singularValues()(1) <=
                            kDegenerateSpectrumRatio * svd.singularValues()(0);
  return out;
}

}  // namespace doalign
