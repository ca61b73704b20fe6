#pragma once

#include <Eigen/Core>
#include <vector>

namespace doalign {

enum class SdpStatus {
  kOptimal,
  kReducedAccuracy,  // stopped at the numerical floor short of the tolerances
  kMaxIterations,
  kNumericalTrouble,
};

struct IpmOptions {
  double tol_gap = 1e-10;      // relative duality gap
  double tol_feas = 1e-8;      // primal and dual feasibility
  double tol_reduced = 1e-5;   // acceptable quality when progress dies early
  int max_iterations = 200;
  double step_fraction = 0.98;  // fraction of the distance to the boundary
  bool verbose = false;         // per-iteration trace on stderr
};

struct IpmResult {
  Eigen::MatrixXd x;  // primal block
  Eigen::VectorXd y;  // equality multipliers
  Eigen::MatrixXd z;  // dual slack block
  double objective = 0.0;
  double gap = 0.0;
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  int iterations = 0;
  SdpStatus status = SdpStatus::kNumericalTrouble;
};

/// Minimises <C, X> subject to <A_i, X> = b_i and X positive semidefinite.
///
/// Infeasible-start primal-dual path following with Nesterov-Todd scaling
/// and a Mehrotra predictor step to pick the centring weight. One Schur
/// complement factorisation per iteration; suited to the small dense blocks
/// (n <= ~40, m <= ~100) that arise from lifted pose problems.
///
/// The constraint matrices must be symmetric and linearly independent;
/// violating that surfaces as a singular Schur complement and a
/// kNumericalTrouble result.
IpmResult solve_sdp(const Eigen::MatrixXd& c,
                    const std::vector<Eigen::MatrixXd>& constraints,
                    const Eigen::VectorXd& b,
                    const IpmOptions& options = {});

}  // namespace doalign
