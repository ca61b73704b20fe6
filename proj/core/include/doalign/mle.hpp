#pragma once

#include <Eigen/Core>
#include <limits>
#include <vector>

#include "doalign/geometry.hpp"
#include "doalign/linear_system.hpp"

namespace doalign {

/// Standard deviations of the body-frame azimuth and elevation noise in
/// radians. Both must be positive wherever a likelihood is evaluated.
struct NoiseModel {
  double sigma_azimuth = 0.0;
  double sigma_elevation = 0.0;
};

/// Known per-epoch attitude of the receiver: the rigid transform taking
/// vehicle-centred INS coordinates into the body-fixed frame. A translation
/// slot is carried for symmetry with the other transforms, but both frames
/// are centred on the vehicle, so every generator in this codebase leaves
/// it at zero.
struct AttitudeLog {
  std::vector<Pose> entries;
};

/// Attitude log with one identity entry per epoch, the stance taken when no
/// attitude record exists for a dataset.
AttitudeLog identity_attitudes(int epoch_count, char agent = 'B');

/// Direction of the broadcaster as the receiver's body-mounted array would
/// measure it under the pose hypothesis (rotation, translation): the
/// INS-frame separation (R p_broadcaster + t) - p_receiver rotated by the
/// epoch attitude. Throws ConfigError when the attitude log does not match
/// the epochs or the index is out of range, DegenerateVectorError when the
/// separation collapses.
DoaMeasurement predict_body_doa(int index, const Rotation& rotation,
                                const Eigen::Vector3d& translation,
                                const std::vector<MeasurementEpoch>& epochs,
                                const AttitudeLog& attitudes);

/// The stored INS-frame measurement re-expressed in the body-fixed frame
/// through the known attitude. Lossless: simulators convert body
/// measurements into the INS frame through the same rotation.
DoaMeasurement measured_body_doa(int index,
                                 const std::vector<MeasurementEpoch>& epochs,
                                 const AttitudeLog& attitudes);

/// Gaussian negative log-likelihood of the measured body-frame angles under
/// the pose hypothesis: squared residuals weighted by 1/(2 sigma^2), summed
/// over epochs, with every angular residual wrapped to (-pi, pi] before
/// squaring. Throws EmptyInputError without epochs and
/// NonPositiveScaleError on a non-positive sigma.
double negative_log_likelihood(const Rotation& rotation,
                               const Eigen::Vector3d& translation,
                               const std::vector<MeasurementEpoch>& epochs,
                               const AttitudeLog& attitudes,
                               const NoiseModel& noise);

/// Descent parametrisation: intrinsic Z-Y-X Euler angles of the rotation
/// followed by the translation.
using MlParams = Eigen::Matrix<double, 6, 1>;

/// Central finite-difference steps used for the likelihood gradient.
inline constexpr double kFdStepAngle = 1e-6;   // radians
inline constexpr double kFdStepLength = 1e-4;  // metres

/// Central finite-difference gradient of the negative log-likelihood with
/// respect to the six pose parameters.
MlParams nll_gradient(const MlParams& params,
                      const std::vector<MeasurementEpoch>& epochs,
                      const AttitudeLog& attitudes, const NoiseModel& noise);

/// One accepted iterate of the descent. `params` holds the absolute Euler
/// angles of the rotation followed by the translation. The error fields are
/// populated only when ground truth is supplied to refine().
struct MlState {
  MlParams params = MlParams::Zero();
  double nll = 0.0;
  double gradient_norm = 0.0;
  int iteration = 0;
  double rotation_error = std::numeric_limits<double>::quiet_NaN();
  double position_error = std::numeric_limits<double>::quiet_NaN();
};

struct MlOptions {
  int max_iterations = 500;
  double gradient_tolerance = 1e-7;
  /// Stop when the relative likelihood decrease over `stall_window`
  /// accepted iterations falls below this.
  double stall_tolerance = 1e-10;
  int stall_window = 5;
  double armijo_constant = 1e-4;
  double backtrack_shrink = 0.5;
  double initial_step = 1.0;
};

enum class MlStatus {
  kConverged,      // gradient norm under tolerance
  kStalled,        // likelihood stopped decreasing
  kMaxIterations,  // iteration cap hit first
};

/// Pitch margin from +-pi/2 at which the Euler parametrisation is
/// re-anchored at the current rotation to dodge the gimbal seam.
inline constexpr double kGimbalLockMargin = 1e-3;

/// Optional ground truth used to annotate the trace with the convergence
/// metrics: geodesic rotation error and normalised reconstruction error of
/// the receiver track.
struct RefineTruth {
  Rotation rotation;
  std::vector<Eigen::Vector3d> receiver_global;
};

struct MlResult {
  Rotation rotation;  // iterate with the lowest likelihood
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  MlStatus status = MlStatus::kMaxIterations;
  /// The pitch entered the re-anchoring margin at least once.
  bool gimbal_lock = false;
  /// Accepted iterates; front() is the initial point.
  std::vector<MlState> trace;
};

/// Gradient descent on the negative log-likelihood with Armijo
/// backtracking, started from the given pose (in practice the projected
/// relaxation estimate). The accepted-iterate likelihood sequence is
/// non-increasing by construction.
MlResult refine(const Rotation& initial_rotation,
                const Eigen::Vector3d& initial_translation,
                const std::vector<MeasurementEpoch>& epochs,
                const AttitudeLog& attitudes, const NoiseModel& noise,
                const MlOptions& options = {},
                const RefineTruth* truth = nullptr);

}  // namespace doalign
