#include "doalign/linear_system.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>
#include <cmath>

#include "doalign/errors.hpp"

namespace doalign {

namespace {
constexpr double kRankThreshold = 1e-10;
}

PoseVector pack_pose(const Rotation& rotation, const Eigen::Vector3d& t) {
  return pack_pose_raw(rotation.matrix(), t);
}

PoseVector pack_pose_raw(const Eigen::Matrix3d& m, const Eigen::Vector3d& t) {
  PoseVector psi;
  psi << m(0, 0), m(0, 1), m(0, 2),
         m(1, 0), m(1, 1), m(1, 2),
         m(2, 0), m(2, 1), m(2, 2),
         t(0), t(1), t(2);
  return psi;
}

PoseVectorParts split_pose_vector(const PoseVector& psi) {
  PoseVectorParts parts;
  parts.rotation_block << psi(0), psi(1), psi(2),
                          psi(3), psi(4), psi(5),
                          psi(6), psi(7), psi(8);
  parts.translation = psi.tail<3>();
  return parts;
}

LinearSystem assemble(const std::vector<MeasurementEpoch>& epochs) {
  if (epochs.empty()) {
    throw EmptyInputError("cannot assemble a system from zero epochs");
  }
  LinearSystem sys;
  sys.epoch_count = static_cast<int>(epochs.size());
  sys.lhs = Eigen::MatrixXd::Zero(2 * sys.epoch_count, kPoseVectorSize);
  sys.rhs = Eigen::VectorXd::Zero(2 * sys.epoch_count);

  for (int i = 0; i < sys.epoch_count; ++i) {
    const MeasurementEpoch& e = epochs[i];
    const Eigen::Vector3d& a = e.broadcaster_global;
    const Eigen::Vector3d& b = e.receiver_local;
    const double c1 = std::cos(e.doa.azimuth) * std::cos(e.doa.elevation);
    const double c2 = std::sin(e.doa.azimuth) * std::cos(e.doa.elevation);
    const double c3 = std::sin(e.doa.elevation);

    // Cross-multiplied collinearity of the separation vector with the
    // measured direction: one x-z equation and one y-z equation per epoch.
    const int rx = 2 * i;
    const int ry = 2 * i + 1;
    sys.lhs.block<1, 3>(rx, 0) = c3 * a.transpose();
    sys.lhs.block<1, 3>(rx, 6) = -c1 * a.transpose();
    sys.lhs(rx, 9) = c3;
    sys.lhs(rx, 11) = -c1;
    sys.rhs(rx) = c3 * b.x() - c1 * b.z();

    sys.lhs.block<1, 3>(ry, 3) = c3 * a.transpose();
    sys.lhs.block<1, 3>(ry, 6) = -c2 * a.transpose();
    sys.lhs(ry, 10) = c3;
    sys.lhs(ry, 11) = -c2;
    sys.rhs(ry) = c3 * b.y() - c2 * b.z();
  }
  return sys;
}

void apply_shift(LinearSystem& system, const Eigen::Vector3d& t_guess) {
  // The right-hand side is linear in the receiver position with the
  // translation columns as coefficients.
  system.rhs -= system.lhs.rightCols<3>() * t_guess;
}

void apply_translation_scaling(LinearSystem& system, double s) {
  if (!(s > 0.0)) {
    throw NonPositiveScaleError("translation scale must be positive, got " +
                                std::to_string(s));
  }
  system.lhs.rightCols<3>() *= s;
}

LsSolution solve_ls(const LinearSystem& system) {
  if (system.epoch_count < 6) {
    throw ConfigError("least squares needs at least 6 epochs, got " +
                      std::to_string(system.epoch_count));
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      system.lhs, Eigen::ComputeThinU | Eigen::ComputeThinV);

  LsSolution sol;
  sol.singular_values = svd.singularValues();
  const double smax = sol.singular_values(0);
  for (int i = 0; i < sol.singular_values.size(); ++i) {
    if (sol.singular_values(i) > kRankThreshold * smax) ++sol.rank;
  }
  sol.rank_deficient = sol.rank < kPoseVectorSize;

  svd.setThreshold(kRankThreshold);
  sol.psi = svd.solve(system.rhs);
  // One step of iterative refinement sharpens badly scaled but consistent
  // systems toward working precision.
  sol.psi += svd.solve(system.rhs - system.lhs * sol.psi);
  sol.residual_norm = (system.lhs * sol.psi - system.rhs).norm();
  return sol;
}

namespace {

Eigen::Matrix3d skew(const Eigen::Vector3d& w) {
  Eigen::Matrix3d m;
  m << 0.0, -w.z(), w.y(), w.z(), 0.0, -w.x(), -w.y(), w.x(), 0.0;
  return m;
}

Eigen::Matrix3d exp_so3(const Eigen::Vector3d& w) {
  const double angle = w.norm();
  if (angle < 1e-15) return Eigen::Matrix3d::Identity() + skew(w);
  const Eigen::Matrix3d k = skew(w / angle);
  return Eigen::Matrix3d::Identity() + std::sin(angle) * k +
         (1.0 - std::cos(angle)) * k * k;
}

}  // namespace

PolishedPose polish_pose(const LinearSystem& system,
                         const Rotation& initial_rotation,
                         const Eigen::Vector3d& initial_translation,
                         int max_iterations) {
  if (system.lhs.cols() != kPoseVectorSize ||
      system.lhs.rows() != system.rhs.size()) {
    throw ConfigError("polish expects a 2K x 12 pose system");
  }

  PolishedPose out;
  Eigen::Matrix3d r = initial_rotation.matrix();
  Eigen::Vector3d t = initial_translation;
  Eigen::VectorXd residual =
      system.lhs * pack_pose_raw(r, t) - system.rhs;
  double value = residual.norm();

  bool done = false;
  for (int iter = 0; iter < max_iterations && !done; ++iter) {
    Eigen::MatrixXd jac(system.lhs.rows(), 6);
    for (int axis = 0; axis < 3; ++axis) {
      const Eigen::Matrix3d dr = r * skew(Eigen::Vector3d::Unit(axis));
      jac.col(axis) =
          system.lhs * pack_pose_raw(dr, Eigen::Vector3d::Zero());
    }
    jac.rightCols<3>() = system.lhs.rightCols<3>();

    const Eigen::Matrix<double, 6, 6> normal = jac.transpose() * jac;
    const Eigen::Matrix<double, 6, 1> gradient = jac.transpose() * residual;
    const Eigen::Matrix<double, 6, 1> step = -normal.ldlt().solve(gradient);
    if (!step.allFinite()) break;

    double fraction = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 12 && !accepted; ++halving) {
      const Eigen::Matrix3d r_next = r * exp_so3(fraction * step.head<3>());
      const Eigen::Vector3d t_next = t + fraction * step.tail<3>();
      const Eigen::VectorXd res_next =
          system.lhs * pack_pose_raw(r_next, t_next) - system.rhs;
      if (res_next.norm() < value) {
        const double improvement = value - res_next.norm();
        r = r_next;
        t = t_next;
        residual = res_next;
        value = res_next.norm();
        out.iterations = iter + 1;
        accepted = true;
        done = improvement < 1e-15 * std::max(1.0, value);
      }
      fraction *= 0.5;
    }
    if (!accepted) break;
  }

  // Orthonormality drifts only by accumulated rounding, but make the
  // returned matrix an exact projection regardless.
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU();
  if ((u * svd.matrixV().transpose()).determinant() < 0.0) u.col(2) *= -1.0;
  out.rotation = Rotation::from_matrix(u * svd.matrixV().transpose(), 1e-6);
  out.translation = t;
  out.residual_norm =
      (system.lhs * pack_pose(out.rotation, out.translation) - system.rhs)
          .norm();
  return out;
}

}  // namespace doalign
