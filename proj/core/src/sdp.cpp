#include "doalign/sdp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "doalign/errors.hpp"

namespace doalign {

namespace {

struct OrthonormalSystem {
  std::vector<Eigen::MatrixXd> mats;
  Eigen::VectorXd rhs;
};

/// Jointly orthonormalises the constraint matrices (Frobenius inner
/// product), carrying the right-hand sides along. A row whose matrix part
/// cancels is dropped when its residual right-hand side is negligible and
/// reported as infeasible otherwise.
OrthonormalSystem orthonormalise(const std::vector<Eigen::MatrixXd>& mats,
                                 const Eigen::VectorXd& rhs) {
  OrthonormalSystem out;
  std::vector<double> rhs_kept;
  for (size_t i = 0; i < mats.size(); ++i) {
    Eigen::MatrixXd q = mats[i];
    double r = rhs(i);
    const double original_norm = q.norm();
    // Two passes of modified Gram-Schmidt keep the basis orthonormal to
    // working precision.
    for (int pass = 0; pass < 2; ++pass) {
      for (size_t j = 0; j < out.mats.size(); ++j) {
        const double alpha = q.cwiseProduct(out.mats[j]).sum();
        q -= alpha * out.mats[j];
        r -= alpha * rhs_kept[j];
      }
    }
    const double norm = q.norm();
    if (norm <= 1e-12 * (1.0 + original_norm)) {
      if (std::abs(r) > 1e-6) {
        throw InfeasibleProblemError(
            "equality constraints are inconsistent: dependent row with "
            "residual " +
            std::to_string(r));
      }
      continue;  // redundant row
    }
    out.mats.push_back(q / norm);
    rhs_kept.push_back(r / norm);
  }
  out.rhs = Eigen::Map<Eigen::VectorXd>(rhs_kept.data(),
                                        static_cast<long>(rhs_kept.size()));
  return out;
}

}  // namespace

LiftedProblem lift(const LinearSystem& system,
                   std::vector<QuadraticConstraint> constraints) {
  LiftedProblem p;
  p.dim = kLiftedSize;
  Eigen::MatrixXd stacked(system.lhs.rows(), kLiftedSize);
  stacked << system.lhs, system.rhs;
  p.cost = stacked.transpose() * stacked;
  p.constraints = std::move(constraints);
  return p;
}

SdpSolution solve_relaxed(const LiftedProblem& problem,
                          const RelaxationOptions& options) {
  const int n = problem.dim;

  // The anchored ridge minimiser of the cost predicts the magnitude of each
  // unknown; a diagonal congruence brings those to order one so the interior
  // point iterates stay conditioned no matter how the caller scaled the
  // translations. X = D X~ D maps the solution back exactly.
  Eigen::VectorXd d = Eigen::VectorXd::Ones(n);
  {
    const double tau = 1e-12 * problem.cost.trace() + 1e-300;
    const Eigen::LDLT<Eigen::MatrixXd> ridge(
        problem.cost + tau * Eigen::MatrixXd::Identity(n, n));
    const Eigen::VectorXd u = ridge.solve(Eigen::VectorXd::Unit(n, n - 1));
    if (ridge.info() == Eigen::Success && std::abs(u(n - 1)) > 0.0) {
      for (int j = 0; j + 1 < n; ++j) {
        d(j) = std::clamp(std::abs(u(j) / u(n - 1)), 1.0, 1e8);
      }
    }
  }
  const Eigen::MatrixXd cost =
      d.asDiagonal() * problem.cost * d.asDiagonal();

  // Anchor first so its right-hand side survives the orthonormalisation
  // unperturbed, then the quadratic identities.
  std::vector<Eigen::MatrixXd> mats;
  Eigen::VectorXd rhs(problem.constraints.size() + 1);
  Eigen::MatrixXd anchor = Eigen::MatrixXd::Zero(n, n);
  anchor(n - 1, n - 1) = 1.0;
  mats.push_back(anchor);
  rhs(0) = 1.0;
  for (size_t i = 0; i < problem.constraints.size(); ++i) {
    mats.push_back(d.asDiagonal() * problem.constraints[i].q *
                   d.asDiagonal());
    rhs(static_cast<long>(i) + 1) = problem.constraints[i].rhs;
  }
  const OrthonormalSystem sys = orthonormalise(mats, rhs);

  const double cost_scale = std::max(1.0, cost.norm());

  IpmOptions ipm_opts;
  ipm_opts.tol_gap = options.tol_gap;
  ipm_opts.tol_feas = options.tol_feas;
  ipm_opts.max_iterations = options.max_iterations;
  const IpmResult ipm =
      solve_sdp(cost / cost_scale, sys.mats, sys.rhs, ipm_opts);

  SdpSolution sol;
  sol.x = d.asDiagonal() * ipm.x * d.asDiagonal();
  sol.status = ipm.status;
  sol.iterations = ipm.iterations;
  sol.objective = problem.cost.cwiseProduct(sol.x).sum();

  sol.constraint_residuals.resize(problem.constraints.size() + 1);
  for (size_t i = 0; i < problem.constraints.size(); ++i) {
    sol.constraint_residuals(static_cast<long>(i)) =
        std::abs(problem.constraints[i].q.cwiseProduct(sol.x).sum() -
                 problem.constraints[i].rhs);
  }
  sol.constraint_residuals(static_cast<long>(problem.constraints.size())) =
      std::abs(sol.x(n - 1, n - 1) - 1.0);

  // Rank diagnostics read best in the equilibrated frame, where the solver's
  // own accuracy sets the noise floor.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ipm.x,
                                                    Eigen::EigenvaluesOnly);
  const double lead = std::max(es.eigenvalues()(n - 1), 0.0);
  const double second = std::max(es.eigenvalues()(n - 2), 0.0);
  sol.rank_ratio = lead > 0.0 ? second / lead : 1.0;
  return sol;
}

ExtractedPose extract_pose_vector(const Eigen::MatrixXd& x) {
  const int n = static_cast<int>(x.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(x);
  const double lead = std::max(es.eigenvalues()(n - 1), 0.0);
  const double second = std::max(es.eigenvalues()(n - 2), 0.0);

  ExtractedPose out;
  out.rank_ratio = lead > 0.0 ? second / lead : 1.0;
  out.degenerate_top = lead > 0.0 && (lead - second) <= 1e-6 * lead;

  const auto rescale = [n](const Eigen::VectorXd& v) {
    // Flip and scale so the homogenising entry reads -1.
    const double hom = v(n - 1);
    Eigen::VectorXd psi = v.head(n - 1);
    if (std::abs(hom) < 1e-12) return psi;  // direction only, sign unknown
    psi /= -hom;
    return psi;
  };
  out.psi = rescale(es.eigenvectors().col(n - 1));
  if (out.degenerate_top) {
    out.alternate = rescale(es.eigenvectors().col(n - 2));
  }
  return out;
}

}  // namespace doalign
