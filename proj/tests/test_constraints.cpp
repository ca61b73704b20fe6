#include <doctest.h>

#include <Eigen/Dense>
#include <map>
#include <random>
#include <set>

#include "doalign/constraints.hpp"
#include "doalign/linear_system.hpp"
#include "support/test_helpers.hpp"

using namespace doalign;

namespace {

Eigen::VectorXd lift_vectorised(const QuadraticConstraint& c) {
  return Eigen::Map<const Eigen::VectorXd>(c.q.data(), c.q.size());
}

}  // namespace

TEST_CASE("all 21 identities vanish on proper rotations") {
  std::mt19937_64 rng(1009);
  const auto constraints = rotation_constraints();
  REQUIRE(constraints.size() == 21);
  for (int trial = 0; trial < 500; ++trial) {
    const Rotation r = test_helpers::random_rotation(rng);
    const Eigen::Vector3d t = test_helpers::random_vector(rng, 800.0);
    const Eigen::VectorXd psi = pack_pose(r, t);
    for (const auto& c : constraints) {
      CHECK(std::abs(evaluate_constraint(c, psi)) < 1e-12);
    }
  }
}

TEST_CASE("reflections violate the adjugate identities only") {
  const Eigen::Matrix3d reflect = Eigen::Vector3d(1, 1, -1).asDiagonal();
  const Eigen::VectorXd psi =
      pack_pose_raw(reflect, Eigen::Vector3d(10, -20, 30));
  const auto constraints = rotation_constraints();
  double max_ortho = 0.0;
  double max_adjugate = 0.0;
  for (const auto& c : constraints) {
    const double v = std::abs(evaluate_constraint(c, psi));
    if (c.family == ConstraintFamily::kRowOrthonormality ||
        c.family == ConstraintFamily::kColumnOrthonormality) {
      max_ortho = std::max(max_ortho, v);
    } else {
      max_adjugate = std::max(max_adjugate, v);
    }
  }
  CHECK(max_ortho < 1e-15);
  CHECK(max_adjugate >= 1.0);
}

TEST_CASE("hand-evaluated polynomial values") {
  const auto constraints = rotation_constraints();
  // psi = 2 * identity rotation block, zero translation.
  Eigen::VectorXd psi = Eigen::VectorXd::Zero(12);
  psi(0) = psi(4) = psi(8) = 2.0;
  // Row norm: 4 - 1.
  CHECK(evaluate_constraint(constraints[0], psi) == doctest::Approx(3.0));
  // Cross row product: 0.
  CHECK(evaluate_constraint(constraints[3], psi) == doctest::Approx(0.0));
  // First adjugate entry: 2 - 2*2 = -2.
  CHECK(evaluate_constraint(constraints[12], psi) == doctest::Approx(-2.0));

  // A generic asymmetric check of one off-diagonal adjugate identity:
  // C20 = r12 - (r01 r20 - r00 r21).
  Eigen::VectorXd g(12);
  g << 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 5.0, -3.0, 2.0;
  const double expected = 0.6 - (0.2 * 0.7 - 0.1 * 0.8);
  CHECK(evaluate_constraint(constraints[19], g) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("constraint matrices are symmetric with zero rhs") {
  for (const auto& c : rotation_constraints()) {
    CHECK(c.rhs == 0.0);
    CHECK((c.q - c.q.transpose()).norm() == 0.0);
    CHECK(c.q.rows() == kLiftedSize);
  }
}

TEST_CASE("family grouping is 6+6+3+3+3 with unique labels") {
  std::map<ConstraintFamily, int> counts;
  std::set<std::string> labels;
  for (const auto& c : rotation_constraints()) {
    counts[c.family]++;
    labels.insert(c.label);
  }
  CHECK(labels.size() == 21);
  CHECK(counts[ConstraintFamily::kRowOrthonormality] == 6);
  CHECK(counts[ConstraintFamily::kColumnOrthonormality] == 6);
  CHECK(counts[ConstraintFamily::kAdjugateColumn1] == 3);
  CHECK(counts[ConstraintFamily::kAdjugateColumn2] == 3);
  CHECK(counts[ConstraintFamily::kAdjugateColumn3] == 3);
}

TEST_CASE("anchored constraint stack has rank 21") {
  const auto constraints = rotation_constraints();

  // The sum of the three row norms equals the sum of the three column
  // norms, so the 21 identities alone span only a 20-dimensional space.
  Eigen::MatrixXd dependency = constraints[0].q + constraints[1].q +
                               constraints[2].q - constraints[6].q -
                               constraints[7].q - constraints[8].q;
  CHECK(dependency.norm() == 0.0);

  Eigen::MatrixXd stacked(constraints.size() + 1,
                          kLiftedSize * kLiftedSize);
  for (size_t i = 0; i < constraints.size(); ++i) {
    stacked.row(i) = lift_vectorised(constraints[i]).transpose();
  }
  // Homogenising anchor X(12,12) = 1.
  Eigen::MatrixXd anchor = Eigen::MatrixXd::Zero(kLiftedSize, kLiftedSize);
  anchor(kLiftedSize - 1, kLiftedSize - 1) = 1.0;
  stacked.row(constraints.size()) =
      Eigen::Map<const Eigen::VectorXd>(anchor.data(), anchor.size())
          .transpose();

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked);
  const auto& sv = svd.singularValues();
  CHECK(sv(20) > 1e-10 * sv(0));   // rank 21 with the anchor
  CHECK(sv(21) < 1e-10 * sv(0));   // and not 22

  const auto reduced = independent_rotation_constraints();
  REQUIRE(reduced.size() == 6);
  Eigen::MatrixXd stacked6(6, kLiftedSize * kLiftedSize);
  for (size_t i = 0; i < reduced.size(); ++i) {
    stacked6.row(i) = lift_vectorised(reduced[i]).transpose();
    CHECK(reduced[i].family == ConstraintFamily::kRowOrthonormality);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd6(stacked6);
  CHECK(svd6.singularValues()(5) > 1e-10 * svd6.singularValues()(0));
}

TEST_CASE("offset block placement matches the two-agent layout") {
  std::mt19937_64 rng(2021);
  const auto shifted = rotation_constraints_at(12, 37, "X.");
  const auto base = rotation_constraints();
  for (int trial = 0; trial < 50; ++trial) {
    const Rotation r = test_helpers::random_rotation(rng);
    Eigen::VectorXd big = Eigen::VectorXd::Random(36) * 7.0;
    const Eigen::VectorXd psi = pack_pose(r, Eigen::Vector3d(1, 2, 3));
    big.segment<9>(12) = psi.head<9>();
    for (size_t i = 0; i < shifted.size(); ++i) {
      CHECK(std::abs(evaluate_constraint(shifted[i], big)) < 1e-12);
      CHECK(shifted[i].label == "X." + base[i].label);
    }
  }
}
