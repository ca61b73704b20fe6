#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "doalign/errors.hpp"
#include "doalign/sdp.hpp"
#include "support/test_helpers.hpp"

using namespace doalign;

namespace {

double mean_position_scale(const std::vector<MeasurementEpoch>& epochs) {
  double s = 0.0;
  for (const auto& e : epochs) {
    s += e.broadcaster_global.norm() + e.receiver_local.norm();
  }
  return std::max(1.0, s / (2.0 * epochs.size()));
}

bool solved(SdpStatus status) {
  return status == SdpStatus::kOptimal || status == SdpStatus::kReducedAccuracy;
}

struct RelaxedRun {
  SdpSolution solution;
  ExtractedPose extracted;
  PoseVector psi = PoseVector::Zero();  // unscaled pose vector
  double scale = 1.0;
  double cost_norm = 0.0;  // scale the interior point method normalises by
};

RelaxedRun run_two_agent(const std::vector<MeasurementEpoch>& epochs,
                         std::vector<QuadraticConstraint> constraints,
                         double t_scale = 0.0,
                         const RelaxationOptions& opts = {}) {
  RelaxedRun run;
  run.scale = t_scale > 0.0 ? t_scale : mean_position_scale(epochs);
  LinearSystem sys = assemble(epochs);
  apply_translation_scaling(sys, run.scale);
  const LiftedProblem problem = lift(sys, std::move(constraints));
  run.cost_norm = 1.0 + problem.cost.norm();
  run.solution = solve_relaxed(problem, opts);
  run.extracted = extract_pose_vector(run.solution.x);
  run.psi = run.extracted.psi;
  run.psi.tail<3>() *= run.scale;
  return run;
}

}  // namespace

TEST_CASE("lifted cost reproduces the squared measurement residual") {
  std::mt19937_64 rng(4001);
  const auto inst = test_helpers::random_instance(rng, 5);
  const LinearSystem sys = assemble(inst.epochs);
  const LiftedProblem problem = lift(sys, rotation_constraints());
  REQUIRE(problem.cost.rows() == kLiftedSize);
  CHECK((problem.cost - problem.cost.transpose()).norm() < 1e-9);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::VectorXd psi = Eigen::VectorXd::Random(12) * 5.0;
    Eigen::VectorXd lifted(kLiftedSize);
    lifted << psi, -1.0;
    const double via_cost = lifted.dot(problem.cost * lifted);
    const double direct = (sys.lhs * psi - sys.rhs).squaredNorm();
    CHECK(via_cost == doctest::Approx(direct).epsilon(1e-9));
  }
}

TEST_CASE("interior point solver matches the eigenvalue oracle") {
  // min <C, X> with tr X = 1, X >= 0 has optimum lambda_min(C) attained at
  // the corresponding eigenvector outer product.
  std::mt19937_64 rng(4103);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3 + trial % 5;
    Eigen::MatrixXd c(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) c(i, j) = gauss(rng);
    c = Eigen::MatrixXd(0.5 * (c + c.transpose()));
    std::vector<Eigen::MatrixXd> cons = {Eigen::MatrixXd::Identity(n, n)};
    Eigen::VectorXd b(1);
    b << 1.0;
    const IpmResult res = solve_sdp(c, cons, b);
    REQUIRE(solved(res.status));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
    const double lam_min = es.eigenvalues()(0);
    CHECK(res.objective == doctest::Approx(lam_min).epsilon(1e-6));
    // With a simple minimum eigenvalue the optimiser is rank one.
    if (es.eigenvalues()(1) - lam_min > 0.1) {
      const Eigen::VectorXd v = es.eigenvectors().col(0);
      CHECK((res.x - v * v.transpose()).norm() < 1e-4);
    }
  }
}

TEST_CASE("inconsistent equalities are rejected, redundant ones dropped") {
  std::mt19937_64 rng(4207);
  const auto inst = test_helpers::random_instance(rng, 4);
  const LinearSystem sys = assemble(inst.epochs);

  LiftedProblem problem = lift(sys, rotation_constraints());
  QuadraticConstraint conflicting;
  conflicting.q = Eigen::MatrixXd::Zero(kLiftedSize, kLiftedSize);
  conflicting.q(kLiftedSize - 1, kLiftedSize - 1) = 1.0;
  conflicting.rhs = 2.0;  // collides with the anchor X(12,12) = 1
  conflicting.label = "conflict";
  problem.constraints.push_back(conflicting);
  CHECK_THROWS_AS(solve_relaxed(problem), InfeasibleProblemError);

  // Duplicating an identity is harmless.
  LiftedProblem redundant = lift(sys, rotation_constraints());
  redundant.constraints.push_back(redundant.constraints.front());
  const SdpSolution sol = solve_relaxed(redundant);
  CHECK(solved(sol.status));
}

TEST_CASE("noiseless four-epoch instances are recovered to 1e-4") {
  std::mt19937_64 rng(4301);
  for (int trial = 0; trial < 20; ++trial) {
    const auto inst = test_helpers::random_instance(rng, 4);
    const auto run = run_two_agent(inst.epochs, rotation_constraints());
    REQUIRE(solved(run.solution.status));
    CHECK(run.solution.rank_ratio < 1e-6);
    CHECK_FALSE(run.extracted.degenerate_top);
    const PoseVector truth = pack_pose(inst.rotation, inst.translation);
    CHECK((run.psi.head<9>() - truth.head<9>()).cwiseAbs().maxCoeff() < 1e-4);
    CHECK((run.psi.tail<3>() - truth.tail<3>()).norm() /
              inst.translation.norm() <
          1e-4);
    // Anchor is met and all identities hold at the solution.
    CHECK(run.solution.constraint_residuals.maxCoeff() < 1e-6);
    // Relaxation lower bound: never above the cost of the true pose, up to
    // the duality gap left at the stop (proportional to the cost scale).
    const LinearSystem sys = assemble(inst.epochs);
    const double truth_cost = (sys.lhs * truth - sys.rhs).squaredNorm();
    CHECK(run.solution.objective <=
          truth_cost * (1.0 + 1e-6) + 1e-9 * run.cost_norm);
  }
}

TEST_CASE("three-epoch instances yield high-rank relaxations") {
  std::mt19937_64 rng(4409);
  int flagged = 0;
  const int trials = 20;
  for (int trial = 0; trial < trials; ++trial) {
    const auto inst = test_helpers::random_instance(rng, 3);
    const auto run = run_two_agent(inst.epochs, rotation_constraints());
    const PoseVector truth = pack_pose(inst.rotation, inst.translation);
    const bool ambiguous = run.solution.rank_ratio > 1e-3;
    const bool recovered =
        (run.psi.head<9>() - truth.head<9>()).cwiseAbs().maxCoeff() < 1e-4 &&
        (run.psi.tail<3>() - truth.tail<3>()).norm() /
                inst.translation.norm() <
            1e-4;
    if (ambiguous || !recovered) ++flagged;
  }
  CHECK(flagged >= trials * 9 / 10);
}

TEST_CASE("relaxation objective never exceeds the true cost under noise") {
  std::mt19937_64 rng(4501);
  std::normal_distribution<double> noise(0.0, deg_to_rad(1.0));
  for (int trial = 0; trial < 10; ++trial) {
    auto inst = test_helpers::random_instance(rng, 8);
    for (auto& e : inst.epochs) {
      const auto [az, el] = canonicalize_doa(e.doa.azimuth + noise(rng),
                                             e.doa.elevation + noise(rng));
      e.doa.azimuth = az;
      e.doa.elevation = el;
    }
    const double scale = mean_position_scale(inst.epochs);
    LinearSystem sys = assemble(inst.epochs);
    apply_translation_scaling(sys, scale);
    const LiftedProblem problem = lift(sys, rotation_constraints());
    const double slack = 1e-9 * (1.0 + problem.cost.norm());
    const SdpSolution sol = solve_relaxed(problem);
    REQUIRE(solved(sol.status));
    PoseVector truth = pack_pose(inst.rotation, inst.translation);
    truth.tail<3>() /= scale;
    const double truth_cost = (sys.lhs * truth - sys.rhs).squaredNorm();
    CHECK(sol.objective <= truth_cost * (1.0 + 1e-6) + slack);

    // Dropping the dependent identities enlarges the feasible set, so the
    // optimum can only go down.
    const SdpSolution reduced =
        solve_relaxed(lift(sys, independent_rotation_constraints()));
    REQUIRE(solved(reduced.status));
    CHECK(reduced.objective <= sol.objective * (1.0 + 1e-6) + slack);
  }
}

TEST_CASE("translation scaling choice does not move the solution") {
  std::mt19937_64 rng(4601);
  const auto inst = test_helpers::random_instance(rng, 6);
  const auto a = run_two_agent(inst.epochs, rotation_constraints(), 1.0);
  const auto b = run_two_agent(inst.epochs, rotation_constraints(),
                               inst.translation.norm());
  REQUIRE(solved(a.solution.status));
  REQUIRE(solved(b.solution.status));
  // Both runs approximate the same pose; they differ by at most the sum of
  // their extraction accuracies.
  CHECK((a.psi - b.psi).cwiseAbs().maxCoeff() /
            (1.0 + inst.translation.norm()) <
        1e-4);
}

TEST_CASE("shifting by the true translation centres the estimate") {
  std::mt19937_64 rng(4703);
  const auto inst = test_helpers::random_instance(rng, 5);
  LinearSystem sys = assemble(inst.epochs);
  apply_shift(sys, inst.translation);
  const SdpSolution sol = solve_relaxed(lift(sys, rotation_constraints()));
  REQUIRE(solved(sol.status));
  const ExtractedPose ex = extract_pose_vector(sol.x);
  CHECK((ex.psi.head<9>() -
         Eigen::Map<const Eigen::VectorXd>(
             Eigen::Matrix3d(inst.rotation.matrix().transpose()).data(), 9))
            .cwiseAbs()
            .maxCoeff() < 1e-4);
  CHECK(ex.psi.tail<3>().norm() < 1e-3 * inst.translation.norm());
}

TEST_CASE("reflections cannot fool the full constraint set") {
  // Data manufactured from an improper transform: with only the
  // orthonormality identities the relaxation happily explains it, while the
  // adjugate identities force a genuine rotation and a nonzero cost.
  std::mt19937_64 rng(4801);
  const Eigen::Matrix3d reflect =
      test_helpers::random_rotation(rng).matrix() *
      Eigen::Vector3d(1, 1, -1).asDiagonal();
  const Eigen::Vector3d t = test_helpers::random_vector(rng, 300.0);
  std::vector<MeasurementEpoch> epochs;
  for (int k = 0; k < 6; ++k) {
    MeasurementEpoch e;
    e.k = k;
    e.broadcaster_global = test_helpers::random_vector(rng, 1000.0);
    e.receiver_local = test_helpers::random_vector(rng, 1000.0);
    const Eigen::Vector3d sep =
        reflect * e.broadcaster_global + t - e.receiver_local;
    const auto [az, el] = unit_vector_to_doa(sep);
    e.doa = {az, el, local_ins_frame('B'), k};
    epochs.push_back(e);
  }
  const double scale = mean_position_scale(epochs);
  LinearSystem sys = assemble(epochs);
  apply_translation_scaling(sys, scale);

  const LiftedProblem loose_problem =
      lift(sys, independent_rotation_constraints());
  const double slack = 1e-9 * (1.0 + loose_problem.cost.norm());
  const SdpSolution loose = solve_relaxed(loose_problem);
  REQUIRE(solved(loose.status));
  CHECK(loose.objective < slack);

  const SdpSolution full = solve_relaxed(lift(sys, rotation_constraints()));
  REQUIRE(solved(full.status));
  CHECK(full.objective > 1e3 * std::max(loose.objective, slack));
}
