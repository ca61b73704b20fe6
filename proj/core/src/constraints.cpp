#include "doalign/constraints.hpp"

#include <array>

namespace doalign {

void add_quadratic_term(Eigen::MatrixXd& q, int i, int j, double coeff) {
  if (i == j) {
    q(i, i) += coeff;
  } else {
    q(i, j) += coeff / 2.0;
    q(j, i) += coeff / 2.0;
  }
}

void add_linear_term(Eigen::MatrixXd& q, int i, double coeff) {
  // The lifted variable carries -psi_i in its last column, so half the
  // coefficient lands on each of the two mirrored entries with the sign
  // flipped.
  const int anchor = static_cast<int>(q.rows()) - 1;
  q(i, anchor) += -coeff / 2.0;
  q(anchor, i) += -coeff / 2.0;
}

void add_constant_term(Eigen::MatrixXd& q, double coeff) {
  const int anchor = static_cast<int>(q.rows()) - 1;
  q(anchor, anchor) += coeff;
}

double evaluate_constraint(const QuadraticConstraint& c,
                           const Eigen::VectorXd& psi) {
  Eigen::VectorXd lifted(psi.size() + 1);
  lifted << psi, -1.0;
  return lifted.dot(c.q * lifted) - c.rhs;
}

std::vector<QuadraticConstraint> rotation_constraints_at(
    int rot_start, int dim, const std::string& label_prefix) {
  std::vector<QuadraticConstraint> out;
  out.reserve(21);
  const auto r = [rot_start](int i, int j) { return rot_start + 3 * i + j; };
  const auto fresh = [dim](ConstraintFamily family, const std::string& label) {
    QuadraticConstraint c;
    c.q = Eigen::MatrixXd::Zero(dim, dim);
    c.family = family;
    c.label = label;
    return c;
  };
  int tag = 1;
  const auto name = [&label_prefix, &tag]() {
    return label_prefix + "C" + std::to_string(tag++);
  };

  constexpr std::array<std::array<int, 2>, 6> kPairs = {
      {{0, 0}, {1, 1}, {2, 2}, {0, 1}, {0, 2}, {1, 2}}};

  // Rows of the matrix form an orthonormal set.
  for (const auto& [a, b] : kPairs) {
    auto c = fresh(ConstraintFamily::kRowOrthonormality, name());
    for (int k = 0; k < 3; ++k) add_quadratic_term(c.q, r(a, k), r(b, k), 1.0);
    if (a == b) add_constant_term(c.q, -1.0);
    out.push_back(std::move(c));
  }
  // So do the columns.
  for (const auto& [a, b] : kPairs) {
    auto c = fresh(ConstraintFamily::kColumnOrthonormality, name());
    for (int k = 0; k < 3; ++k) add_quadratic_term(c.q, r(k, a), r(k, b), 1.0);
    if (a == b) add_constant_term(c.q, -1.0);
    out.push_back(std::move(c));
  }
  // Each entry equals its cofactor, i.e. R equals the transpose of its
  // adjugate. Together with orthonormality this forces det = +1.
  constexpr std::array<ConstraintFamily, 3> kAdjugateFamilies = {
      ConstraintFamily::kAdjugateColumn1, ConstraintFamily::kAdjugateColumn2,
      ConstraintFamily::kAdjugateColumn3};
  for (int j = 0; j < 3; ++j) {
    for (int i = 0; i < 3; ++i) {
      auto c = fresh(kAdjugateFamilies[j], name());
      const int i1 = (i + 1) % 3 < (i + 2) % 3 ? (i + 1) % 3 : (i + 2) % 3;
      const int i2 = (i + 1) % 3 < (i + 2) % 3 ? (i + 2) % 3 : (i + 1) % 3;
      const int j1 = (j + 1) % 3 < (j + 2) % 3 ? (j + 1) % 3 : (j + 2) % 3;
      const int j2 = (j + 1) % 3 < (j + 2) % 3 ? (j + 2) % 3 : (j + 1) % 3;
      const double sign = ((i + j) % 2 == 0) ? 1.0 : -1.0;
      add_linear_term(c.q, r(i, j), 1.0);
      add_quadratic_term(c.q, r(i1, j1), r(i2, j2), -sign);
      add_quadratic_term(c.q, r(i1, j2), r(i2, j1), sign);
      out.push_back(std::move(c));
    }
  }
  return out;
}

std::vector<QuadraticConstraint> rotation_constraints() {
  return rotation_constraints_at(0, kLiftedSize);
}

std::vector<QuadraticConstraint> independent_rotation_constraints() {
  auto all = rotation_constraints();
  all.resize(6);
  return all;
}

}  // namespace doalign
