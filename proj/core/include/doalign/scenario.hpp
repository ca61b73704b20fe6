#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "doalign/geometry.hpp"
#include "doalign/linear_system.hpp"
#include "doalign/mle.hpp"
#include "doalign/sdp.hpp"

namespace doalign {

/// Kinematic rules for one simulated aircraft: straight constant-speed legs
/// between samples, heading turned at every sample by a Gaussian increment
/// whose mean is itself drawn once per trajectory, and an independently
/// drawn flight-path climb angle per leg.
struct TrajectoryParams {
  double horizontal_separation = 800.0;  // m between the two start points
  double broadcaster_altitude = 300.0;   // m
  double receiver_altitude = 350.0;      // m
  double speed = 50.0;                   // m/s
  double sample_period = 5.0;            // s between measurements
  double turn_mean_range_deg = 40.0;     // per-trajectory mean ~ U(-r, r)
  double turn_sigma_deg = 30.0;          // spread of each heading increment
  double climb_sigma_deg = 5.0;          // spread of the climb angle
};

/// Sampling ranges for the hidden navigation drift: three Euler angles
/// uniform on (-euler_range, euler_range) and a translation with entries
/// uniform on (-translation_range, translation_range). The drift is held
/// constant over a scenario.
struct DriftParams {
  double euler_range = std::numbers::pi;
  double translation_range = 600.0;  // m
};

/// One sampled flight path in the global frame, with the heading and climb
/// angle in effect at each sample (radians).
struct Track {
  std::vector<Eigen::Vector3d> positions;
  std::vector<double> heading;
  std::vector<double> climb;
};

/// Draws a track from the kinematic rules. The initial compass heading is
/// uniform over the full circle. Throws ConfigError for a non-positive
/// epoch count, speed, or sample period, or a negative spread.
Track sample_track(std::mt19937_64& rng, int epoch_count,
                   const TrajectoryParams& params,
                   const Eigen::Vector3d& start);

/// Constant-velocity track; the per-sample heading and climb are read off
/// the velocity (zero if the velocity vanishes).
Track straight_track(const Eigen::Vector3d& start,
                     const Eigen::Vector3d& velocity, int epoch_count,
                     double sample_period);

/// True body attitude of a vehicle flying along (heading, climb) with zero
/// roll, expressed relative to its drifted navigation axes: the rotation
/// that the onboard unit would report for the body-fixed frame.
Rotation ins_to_body_attitude(double heading, double climb,
                              const Rotation& drift_rotation);

/// A generated problem instance. `epochs` carries the measurements exactly
/// as a solver would receive them (noisy when the noise model says so);
/// the noiseless angles, the global-frame receiver track, and the drift are
/// kept alongside as ground truth.
struct Scenario {
  std::vector<MeasurementEpoch> epochs;
  std::vector<DoaMeasurement> noiseless_doa;
  std::vector<Eigen::Vector3d> receiver_global;
  AttitudeLog attitudes;
  Rotation drift_rotation;
  Eigen::Vector3d drift_translation = Eigen::Vector3d::Zero();
  NoiseModel noise;
  std::uint64_t seed = 0;
};

/// Assembles a scenario from explicit tracks: re-expresses the receiver
/// positions in the drifted frame, logs the attitudes, computes the
/// noiseless arrival angles, and perturbs them in the body frame with
/// angle noise drawn from a generator seeded by `noise_seed`. Throws
/// EmptyInputError for empty tracks, ConfigError on length mismatches,
/// NonPositiveScaleError on negative noise deviations.
Scenario compose_scenario(const Track& broadcaster, const Track& receiver,
                          const Rotation& drift_rotation,
                          const Eigen::Vector3d& drift_translation,
                          const NoiseModel& noise, std::uint64_t noise_seed);

/// Samples both trajectories, the drift pose, and the measurement noise
/// from one seed. Deterministic: the same arguments always produce the
/// same scenario.
Scenario generate_scenario(int epoch_count,
                           const TrajectoryParams& broadcaster_params,
                           const TrajectoryParams& receiver_params,
                           const DriftParams& drift, const NoiseModel& noise,
                           std::uint64_t seed);

Scenario generate_scenario(int epoch_count, const TrajectoryParams& params,
                           const DriftParams& drift, const NoiseModel& noise,
                           std::uint64_t seed);

/// The scenario restricted to its first `epoch_count` epochs. Throws
/// ConfigError when the count is out of range.
Scenario scenario_prefix(const Scenario& scenario, int epoch_count);

/// Accuracy of a pose estimate against the scenario ground truth: geodesic
/// rotation error, the dimensionless reconstruction error of the receiver
/// track, and the reconstructed global positions themselves.
struct ErrorReport {
  double rotation_error_rad = 0.0;
  double position_error = 0.0;
  std::vector<Eigen::Vector3d> reconstructed;
};

ErrorReport evaluate_estimate(const Rotation& rotation,
                              const Eigen::Vector3d& translation,
                              const Scenario& scenario);

/// Relative threshold below which a singular value (or an angle in
/// radians) counts as degenerate for the suitability checks.
inline constexpr double kUnsuitableRelTol = 1e-6;

/// Geometry conditions under which the pose is not recoverable, each named
/// for the failure it causes. The ratios and the angle are reported so a
/// borderline trajectory can be judged by eye.
struct TrajectoryDiagnostics {
  /// Broadcaster track confined to a plane: three columns of the stacked
  /// linear system become dependent and plain least squares loses rank.
  bool planar_broadcaster = false;
  /// Broadcaster track confined to a line: every rotation about the track
  /// direction fits equally well, so the admissible poses form a circle.
  bool collinear_broadcaster = false;
  /// All arrival directions parallel: distance along them is unobservable
  /// and a whole family of translations reproduces the measurements.
  bool parallel_doa = false;
  double plane_residual_ratio = 0.0;  // sigma_3 / sigma_1 of the centred track
  double line_residual_ratio = 0.0;   // sigma_2 / sigma_1
  double max_doa_angle = 0.0;         // widest pairwise splay, radians

  bool any() const {
    return planar_broadcaster || collinear_broadcaster || parallel_doa;
  }
  /// One sentence per raised flag.
  std::vector<std::string> warnings() const;
};

/// Inspects the broadcaster positions and arrival directions of the given
/// epochs. Needs at least two epochs (ConfigError otherwise).
TrajectoryDiagnostics detect_unsuitable(
    const std::vector<MeasurementEpoch>& epochs);

/// Same checks against the scenario's noiseless angles, so the flags speak
/// about the geometry rather than the noise draws.
TrajectoryDiagnostics detect_unsuitable(const Scenario& scenario);

enum class SolveMethod {
  kLs,     // stacked linear system, minimum-norm least squares
  kSdp,    // rank-relaxed semidefinite solve + rotation projection
  kSdpMl,  // kSdp followed by maximum likelihood descent
};

std::string method_name(SolveMethod method);
std::optional<SolveMethod> parse_method(const std::string& name);

/// Rank ratio of the relaxed solution above which the extracted pose is
/// reported as ambiguous.
inline constexpr double kAmbiguousRankRatio = 1e-3;

struct SolveOptions {
  SolveMethod method = SolveMethod::kSdpMl;
  RelaxationOptions relaxation;
  MlOptions ml;
  /// Likelihood weights for the refinement stage. Non-positive entries
  /// fall back to 1 degree azimuth and four times that for elevation.
  NoiseModel noise;
  /// Column scaling applied to the translation block; non-positive means
  /// automatic (the mean position magnitude, at least 1).
  double translation_scale = 0.0;
  Eigen::Vector3d translation_shift = Eigen::Vector3d::Zero();
  /// Use the full redundant rotation constraint set (default) or only the
  /// orthonormal-row subset.
  bool full_constraints = true;
};

struct SolveReport {
  SolveMethod method = SolveMethod::kSdpMl;
  Rotation rotation;
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  /// Norm of the stacked collinearity residual at the returned pose.
  double residual_norm = 0.0;

  // Least-squares stage (method kLs only). The unconstrained rotation
  // block is projected onto SO(3) for reporting.
  int ls_rank = 0;
  bool ls_rank_deficient = false;

  // Relaxation stage. For kSdpMl these keep the pre-refinement estimate.
  Rotation sdp_rotation;
  Eigen::Vector3d sdp_translation = Eigen::Vector3d::Zero();
  SdpStatus sdp_status = SdpStatus::kNumericalTrouble;
  int sdp_iterations = 0;
  double rank_ratio = 0.0;
  bool ambiguous = false;
  bool procrustes_degenerate = false;

  // Refinement stage (method kSdpMl only).
  MlStatus ml_status = MlStatus::kMaxIterations;
  bool gimbal_lock = false;
  std::vector<MlState> ml_trace;
};

/// Runs the selected estimation pipeline over the epochs. An empty
/// attitude log stands for identity attitudes. Throws EmptyInputError
/// without epochs; solver errors propagate.
SolveReport solve_pose(const std::vector<MeasurementEpoch>& epochs,
                       const AttitudeLog& attitudes,
                       const SolveOptions& options = {});

/// Monte Carlo sweep over noise levels and epoch counts. For every
/// (sigma, trial) pair one scenario is generated with k_max epochs and its
/// prefixes are solved for each K, so the K axis varies over a fixed set
/// of trajectory pairs.
struct CampaignConfig {
  std::vector<double> sigmas_deg = {0.1, 1.0, 2.0};  // azimuth noise
  double elevation_factor = 4.0;  // sigma_elevation / sigma_azimuth
  int k_min = 2;
  int k_max = 20;
  int trials = 100;
  std::uint64_t seed = 0;
  std::vector<SolveMethod> methods = {SolveMethod::kSdp, SolveMethod::kSdpMl};
  /// Worker threads; values below 1 mean one. The result is identical for
  /// every thread count.
  int threads = 1;
  TrajectoryParams trajectory;
  DriftParams drift;
};

struct CampaignCell {
  double sigma_deg = 0.0;
  int epoch_count = 0;
  SolveMethod method = SolveMethod::kSdp;
  double median_rotation_error_deg = 0.0;
  double median_position_error = 0.0;
  int failures = 0;   // trials excluded from the medians
  int successes = 0;  // trials entering the medians
};

struct CampaignResult {
  /// Ordered by noise level, then epoch count, then method (config order).
  std::vector<CampaignCell> cells;
};

/// Runs the campaign. Per-trial seeds are derived from the campaign seed
/// by counter, and aggregation is keyed by trial index, so the output
/// depends only on the configuration. A trial/method pair that throws or
/// ends in numerical trouble is counted as a failure and excluded from the
/// medians. Throws ConfigError on an invalid configuration.
CampaignResult monte_carlo(const CampaignConfig& config);

}  // namespace doalign
