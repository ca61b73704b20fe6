#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace doalign {

/// Size of the lifted two-agent variable: the 12-entry pose vector plus one
/// homogenising entry.
inline constexpr int kLiftedSize = 13;

enum class ConstraintFamily {
  kRowOrthonormality,
  kColumnOrthonormality,
  kAdjugateColumn1,
  kAdjugateColumn2,
  kAdjugateColumn3,
  kRotationComposition,     // three-agent chaining of rotations
  kTranslationComposition,  // three-agent chaining of translations
};

/// One quadratic polynomial identity c(psi) = 0 encoded as a symmetric
/// matrix Q acting on the lifted rank-one variable
/// X = [psi; -1] [psi; -1]^T, so that <Q, X> = c(psi).
struct QuadraticConstraint {
  Eigen::MatrixXd q;
  double rhs = 0.0;
  ConstraintFamily family = ConstraintFamily::kRowOrthonormality;
  std::string label;
};

/// Evaluates <Q, X(psi)> for a bare psi vector of size q.rows() - 1.
double evaluate_constraint(const QuadraticConstraint& c,
                           const Eigen::VectorXd& psi);

/// The 21 identities a row-major flattened matrix satisfies exactly when it
/// is a proper rotation: unit orthogonal rows (6), unit orthogonal columns
/// (6), and equality with the transposed adjugate column by column (9),
/// which rules out reflections. The rotation entries are taken to occupy
/// psi indices [rot_start, rot_start + 9) of a `dim - 1` variable vector
/// whose lifted matrices are dim x dim.
std::vector<QuadraticConstraint> rotation_constraints_at(int rot_start,
                                                         int dim,
                                                         const std::string&
                                                             label_prefix = "");

/// Two-agent constraint set on the 13 x 13 lifted variable.
std::vector<QuadraticConstraint> rotation_constraints();

/// The orthonormal-row subset C1..C6, the largest linearly independent
/// family; used for relaxation ablation.
std::vector<QuadraticConstraint> independent_rotation_constraints();

// Helpers for building custom quadratic constraints (used by the
// three-agent chain identities). Terms accumulate into q.
void add_quadratic_term(Eigen::MatrixXd& q, int i, int j, double coeff);
void add_linear_term(Eigen::MatrixXd& q, int i, double coeff);
void add_constant_term(Eigen::MatrixXd& q, double coeff);

}  // namespace doalign
