#include "doalign/ipm.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace doalign {

namespace {

// The Newton directions amplify roundoff by the condition of the scaling
// point, which grows as the barrier weight shrinks. Extended precision for
// the internals moves the attainable duality gap floor by roughly three
// orders of magnitude and costs little at these block sizes.
using Scalar = long double;
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

Mat symmetrize(const Mat& m) { return 0.5L * (m + m.transpose()); }

/// Largest step alpha in (0, 1] keeping X + alpha dX positive definite,
/// shortened by `fraction`. X must come with its Cholesky factor.
Scalar max_step(const Eigen::LLT<Mat>& llt, const Mat& dx, Scalar fraction) {
  const Mat l = llt.matrixL();
  Mat s = l.triangularView<Eigen::Lower>().solve(dx);
  s.transposeInPlace();
  l.triangularView<Eigen::Lower>().solveInPlace(s);
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(s),
                                        Eigen::EigenvaluesOnly);
  const Scalar lam_min = es.eigenvalues().minCoeff();
  if (lam_min >= -1e-16L) return 1.0L;
  return std::min(Scalar(1), -fraction / lam_min);
}

/// Nesterov-Todd scaling in factored form: X = R diag(lambda) R^T and
/// Z = R^{-T} diag(lambda) R^{-1}, so both variables scale to the same
/// diagonal point and W = R R^T satisfies W Z W = X.
struct Scaling {
  Mat r;
  Mat r_inv;
  Vec lambda;
  Mat w;
  Eigen::LLT<Mat> llt_x;
  Eigen::LLT<Mat> llt_z;
  bool ok = false;
};

Scaling compute_nt_scaling(const Mat& x, const Mat& z) {
  Scaling out;
  out.llt_x.compute(x);
  out.llt_z.compute(z);
  if (out.llt_x.info() != Eigen::Success ||
      out.llt_z.info() != Eigen::Success) {
    return out;
  }
  const Mat lx = out.llt_x.matrixL();
  const Mat lz = out.llt_z.matrixL();
  Eigen::JacobiSVD<Mat> svd(lz.transpose() * lx,
                            Eigen::ComputeFullU | Eigen::ComputeFullV);
  out.lambda = svd.singularValues();
  if (out.lambda.minCoeff() <= 0.0L) return out;
  const Vec inv_sqrt = out.lambda.cwiseSqrt().cwiseInverse();
  out.r = lx * svd.matrixV() * inv_sqrt.asDiagonal();
  out.r_inv = inv_sqrt.asDiagonal() * svd.matrixU().transpose() *
              lz.transpose();
  out.w = out.r * out.r.transpose();
  out.ok = true;
  return out;
}

Scalar inner(const Mat& a, const Mat& b) {
  return a.cwiseProduct(b).sum();
}

}  // namespace

IpmResult solve_sdp(const Eigen::MatrixXd& c_in,
                    const std::vector<Eigen::MatrixXd>& constraints_in,
                    const Eigen::VectorXd& b_in, const IpmOptions& options) {
  const int n = static_cast<int>(c_in.rows());
  const int m = static_cast<int>(constraints_in.size());

  const Mat c = c_in.cast<Scalar>();
  const Vec b = b_in.cast<Scalar>();
  std::vector<Mat> constraints;
  constraints.reserve(constraints_in.size());
  for (const auto& a : constraints_in) constraints.push_back(a.cast<Scalar>());

  const auto apply_a = [&](const Mat& mat) {
    Vec out(m);
    for (int i = 0; i < m; ++i) out(i) = inner(constraints[i], mat);
    return out;
  };
  const auto apply_a_adjoint = [&](const Vec& y) {
    Mat out = Mat::Zero(n, n);
    for (int i = 0; i < m; ++i) out += y(i) * constraints[i];
    return out;
  };

  // Smallest eigenvalue of XZ over its mean, or -1 when X is not positive
  // definite. One is perfectly centred; zero is the boundary.
  const auto centrality = [n](const Mat& xc, const Mat& zc) -> Scalar {
    Eigen::LLT<Mat> llt(xc);
    if (llt.info() != Eigen::Success) return Scalar(-1);
    const Mat l = llt.matrixL();
    Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(l.transpose() * zc * l),
                                          Eigen::EigenvaluesOnly);
    const Scalar mu_c = es.eigenvalues().sum() / n;
    if (!(mu_c > 0.0L)) return Scalar(-1);
    return es.eigenvalues().minCoeff() / mu_c;
  };

  // Initial points sized to the data so the first iterations do not have to
  // climb orders of magnitude.
  Scalar a_norm_max = 1.0L;
  for (const auto& a : constraints) a_norm_max = std::max(a_norm_max, a.norm());
  Scalar xi = std::max(Scalar(10), Scalar(std::sqrt(static_cast<double>(n))));
  if (m > 0) {
    xi = std::max(xi, Scalar(n) * b.cwiseAbs().maxCoeff() /
                          (1.0L + a_norm_max));
  }
  const Scalar eta = std::max(
      {Scalar(10), Scalar(std::sqrt(static_cast<double>(n))), c.norm()});

  Mat x = xi * Mat::Identity(n, n);
  Mat z = eta * Mat::Identity(n, n);
  Vec y = Vec::Zero(m);

  IpmResult best;
  best.x = x.cast<double>();
  best.y = y.cast<double>();
  best.z = z.cast<double>();
  best.status = SdpStatus::kNumericalTrouble;
  double best_score = std::numeric_limits<double>::infinity();
  int stalled_iterations = 0;
  const Scalar b_norm = 1.0L + b.norm();
  const Scalar c_norm = 1.0L + c.norm();

  const auto record = [&](double gap, double pinf, double dinf, double pobj,
                          int iter) {
    best.x = x.cast<double>();
    best.y = y.cast<double>();
    best.z = z.cast<double>();
    best.objective = pobj;
    best.gap = gap;
    best.primal_infeasibility = pinf;
    best.dual_infeasibility = dinf;
    best.iterations = iter;
  };

  // Progress dies near the extended-precision floor; grade whatever iterate
  // scored best rather than discarding a usable answer.
  const auto finish = [&](const char* why, int iter) {
    if (options.verbose) {
      std::fprintf(stderr, "ipm %3d: stopping (%s), best score %.2e\n", iter,
                   why, best_score);
    }
    if (best.gap <= options.tol_gap &&
        best.primal_infeasibility <= options.tol_feas &&
        best.dual_infeasibility <= options.tol_feas) {
      best.status = SdpStatus::kOptimal;
    } else if (best_score <= options.tol_reduced) {
      best.status = SdpStatus::kReducedAccuracy;
    } else {
      best.status = SdpStatus::kNumericalTrouble;
    }
    return best;
  };

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const Vec r_p = b - apply_a(x);
    const Mat r_d = c - z - apply_a_adjoint(y);
    const Scalar xz = inner(x, z);
    const Scalar pobj = inner(c, x);
    const Scalar dobj = b.dot(y);

    const double gap = static_cast<double>(
        std::abs(xz) / (1.0L + std::abs(pobj) + std::abs(dobj)));
    const double pinf = static_cast<double>(r_p.norm() / b_norm);
    const double dinf = static_cast<double>(r_d.norm() / c_norm);

    const double score = std::max({gap, pinf, dinf});
    const bool real_progress = score < 0.99 * best_score;
    if (score < best_score) {
      best_score = score;
      record(gap, pinf, dinf, static_cast<double>(pobj), iter);
    }
    if (real_progress) {
      stalled_iterations = 0;
    } else if (++stalled_iterations >= 10) {
      return finish("stalled", iter);
    }
    if (gap <= options.tol_gap && pinf <= options.tol_feas &&
        dinf <= options.tol_feas) {
      record(gap, pinf, dinf, static_cast<double>(pobj), iter);
      best.status = SdpStatus::kOptimal;
      return best;
    }

    const Scaling nt = compute_nt_scaling(x, z);
    if (!nt.ok) return finish("scaling breakdown", iter);
    const Mat w_rd_w = symmetrize(nt.w * r_d * nt.w);

    Mat schur(m, m);
    std::vector<Mat> waw(m);
    for (int j = 0; j < m; ++j) {
      waw[j] = symmetrize(nt.w * constraints[j] * nt.w);
    }
    for (int i = 0; i < m; ++i) {
      for (int j = i; j < m; ++j) {
        schur(i, j) = inner(constraints[i], waw[j]);
        schur(j, i) = schur(i, j);
      }
    }
    Eigen::LDLT<Mat> schur_fact(schur);
    if (schur_fact.info() != Eigen::Success) {
      return finish("schur factorisation failed", iter);
    }
    const auto solve_schur = [&](const Vec& rhs) {
      Vec sol = schur_fact.solve(rhs);
      sol += schur_fact.solve(rhs - schur * sol);
      return sol;
    };

    struct Direction {
      Mat dx, dz;
      Vec dy;
    };
    const auto newton = [&](const Mat& r_c) {
      Direction d;
      const Vec rhs = r_p - apply_a(r_c) + apply_a(w_rd_w);
      d.dy = solve_schur(rhs);
      d.dz = r_d - apply_a_adjoint(d.dy);
      d.dx = symmetrize(r_c - nt.w * d.dz * nt.w);
      return d;
    };

    const Scalar mu = xz / n;
    const Scalar fraction = Scalar(options.step_fraction);
    // The scaling eigenvalues square to the spectrum of XZ, so this measures
    // how far the worst complementarity product sits below the mean.
    const Scalar lam_min = nt.lambda.minCoeff();
    const Scalar ratio_now = lam_min * lam_min / mu;
    const Scalar kNeighborhood = 1e-3L;

    // Predictor: pure Newton step toward the optimum.
    const Direction aff = newton(-x);
    const Scalar ap_aff = max_step(nt.llt_x, aff.dx, fraction);
    const Scalar ad_aff = max_step(nt.llt_z, aff.dz, fraction);
    const Scalar gap_aff = std::max(
        Scalar(0), inner(x + ap_aff * aff.dx, z + ad_aff * aff.dz));
    Scalar sigma = gap_aff / std::max(xz, Scalar(1e-300));
    sigma = std::clamp(sigma * sigma * sigma, Scalar(1e-12), Scalar(0.999L));

    // Off-centre iterates get a plain centring step: the predictor's defect
    // is computed from a direction that the neighbourhood check is about to
    // reject anyway, and folding it in just feeds the imbalance.
    const bool recenter = ratio_now < kNeighborhood;
    if (recenter) sigma = std::max(sigma, Scalar(0.5L));

    // Corrector: centring step carrying the predictor's second order
    // complementarity defect. In the scaled frame the point is diagonal, so
    // inverting the symmetrised product is an entrywise division.
    const Mat dxs = nt.r_inv * aff.dx * nt.r_inv.transpose();
    const Mat dzs = nt.r.transpose() * aff.dz * nt.r;
    const Mat defect = 0.5L * (dxs * dzs + dzs * dxs);
    Mat rc_scaled(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const Scalar target =
            i == j ? sigma * mu - nt.lambda(i) * nt.lambda(i) : 0.0L;
        const Scalar second = recenter ? Scalar(0) : defect(i, j);
        rc_scaled(i, j) =
            (target - second) * 2.0L / (nt.lambda(i) + nt.lambda(j));
      }
    }
    const Direction dir =
        newton(symmetrize(nt.r * rc_scaled * nt.r.transpose()));
    const Scalar ap = max_step(nt.llt_x, dir.dx, fraction);
    const Scalar ad = max_step(nt.llt_z, dir.dz, fraction);
    if (ap < 1e-10L && ad < 1e-10L) return finish("step collapsed", iter);

    // Accept the longest fraction of the step that keeps the iterate inside
    // a wide centrality neighbourhood. Letting one complementarity product
    // collapse far below the mean is what kills later iterations: every
    // direction then gets blocked by the dead eigenvector.
    const Scalar floor_ratio =
        std::min(kNeighborhood, 0.95L * std::max(ratio_now, Scalar(0)));
    Scalar damp = 1.0L;
    Mat x_next, z_next;
    for (int bt = 0; bt < 24; ++bt) {
      x_next = symmetrize(x + damp * ap * dir.dx);
      z_next = symmetrize(z + damp * ad * dir.dz);
      if (centrality(x_next, z_next) >= floor_ratio) break;
      damp *= 0.7L;
    }

    if (options.verbose) {
      std::fprintf(stderr,
                   "ipm %3d: mu %.2e gap %.2e pinf %.2e dinf %.2e sigma "
                   "%.2e ap %.2e ad %.2e damp %.2e%s\n",
                   iter, static_cast<double>(mu), gap, pinf, dinf,
                   static_cast<double>(sigma), static_cast<double>(ap),
                   static_cast<double>(ad), static_cast<double>(damp),
                   recenter ? " recenter" : "");
    }

    x = x_next;
    y += damp * ad * dir.dy;
    z = z_next;
  }

  best.status = best_score <= options.tol_reduced
                    ? SdpStatus::kReducedAccuracy
                    : SdpStatus::kMaxIterations;
  best.iterations = options.max_iterations;
  return best;
}

}  // namespace doalign
