#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "doalign/constraints.hpp"
#include "doalign/ipm.hpp"
#include "doalign/linear_system.hpp"

namespace doalign {

/// Rank-relaxed form of the pose problem: minimise the quadratic
/// measurement cost <P, X> over lifted variables X >= 0 that satisfy the
/// rotation identities and the homogenising anchor X(dim-1, dim-1) = 1.
struct LiftedProblem {
  Eigen::MatrixXd cost;  // [A b]^T [A b]
  std::vector<QuadraticConstraint> constraints;
  int dim = kLiftedSize;
};

/// Builds the lifted problem from an assembled linear system and a
/// constraint set (normally rotation_constraints()).
LiftedProblem lift(const LinearSystem& system,
                   std::vector<QuadraticConstraint> constraints);

struct RelaxationOptions {
  double tol_gap = 1e-10;
  double tol_feas = 1e-8;
  int max_iterations = 200;
};

struct SdpSolution {
  Eigen::MatrixXd x;
  double objective = 0.0;  // <P, X> at the returned iterate
  /// Absolute residuals |<Q_i, X> - rhs_i| per input constraint, with the
  /// anchor residual |X(n,n) - 1| appended last.
  Eigen::VectorXd constraint_residuals;
  double rank_ratio = 0.0;  // second largest / largest eigenvalue of X
  int iterations = 0;
  SdpStatus status = SdpStatus::kNumericalTrouble;
};

/// Solves the relaxation with the in-library interior point method. The
/// constraint set is orthonormalised first; redundant rows are dropped and
/// an inconsistent system (residual above 1e-6 on a dependent row) throws
/// InfeasibleProblemError.
SdpSolution solve_relaxed(const LiftedProblem& problem,
                          const RelaxationOptions& options = {});

struct ExtractedPose {
  Eigen::VectorXd psi;
  double rank_ratio = 0.0;
  /// Set when the two leading eigenvalues coincide to within 1e-6
  /// relative; `alternate` then carries the second candidate.
  bool degenerate_top = false;
  std::optional<Eigen::VectorXd> alternate;
};

/// Best rank-one reading of the relaxed solution: the dominant eigenvector
/// rescaled so the homogenising entry equals -1.
ExtractedPose extract_pose_vector(const Eigen::MatrixXd& x);

}  // namespace doalign
