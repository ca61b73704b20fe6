#include "doalign/scenario.hpp"

#include <Eigen/Geometry>
#include <Eigen/SVD>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>
#include <utility>

#include "doalign/constraints.hpp"
#include "doalign/errors.hpp"
#include "doalign/metrics.hpp"
#include "doalign/procrustes.hpp"

namespace doalign {

namespace {

// One Gaussian draw with a freshly constructed distribution, so the number
// of generator calls never depends on library-internal caching.
double gauss(std::mt19937_64& rng, double mean, double sigma) {
  if (sigma <= 0.0) return mean;
  std::normal_distribution<double> g(mean, sigma);
  return g(rng);
}

Eigen::Vector3d flight_direction(double heading, double climb) {
  return {std::cos(heading) * std::cos(climb),
          std::sin(heading) * std::cos(climb), std::sin(climb)};
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2]
                    : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

Track sample_track(std::mt19937_64& rng, int epoch_count,
                   const TrajectoryParams& params,
                   const Eigen::Vector3d& start) {
  if (epoch_count < 1) throw ConfigError("track needs at least one sample");
  if (params.speed <= 0.0 || params.sample_period <= 0.0)
    throw ConfigError("speed and sample period must be positive");
  if (params.turn_sigma_deg < 0.0 || params.climb_sigma_deg < 0.0 ||
      params.turn_mean_range_deg < 0.0)
    throw ConfigError("kinematic spreads must be non-negative");

  std::uniform_real_distribution<double> heading_u(0.0, 360.0);
  std::uniform_real_distribution<double> mean_u(-params.turn_mean_range_deg,
                                                params.turn_mean_range_deg);
  double heading = deg_to_rad(heading_u(rng));
  const double turn_mean = mean_u(rng);

  Track track;
  track.positions.reserve(epoch_count);
  track.heading.reserve(epoch_count);
  track.climb.reserve(epoch_count);

  Eigen::Vector3d p = start;
  const double step = params.speed * params.sample_period;
  for (int k = 0; k < epoch_count; ++k) {
    if (k > 0) heading += deg_to_rad(gauss(rng, turn_mean, params.turn_sigma_deg));
    const double climb = deg_to_rad(gauss(rng, 0.0, params.climb_sigma_deg));
    track.positions.push_back(p);
    track.heading.push_back(heading);
    track.climb.push_back(climb);
    p += step * flight_direction(heading, climb);
  }
  return track;
}

Track straight_track(const Eigen::Vector3d& start,
                     const Eigen::Vector3d& velocity, int epoch_count,
                     double sample_period) {
  if (epoch_count < 1) throw ConfigError("track needs at least one sample");
  if (sample_period <= 0.0) throw ConfigError("sample period must be positive");

  double heading = 0.0, climb = 0.0;
  if (velocity.norm() > kDegenerateLength) {
    heading = std::atan2(velocity.y(), velocity.x());
    climb = std::atan2(velocity.z(), velocity.head<2>().norm());
  }
  Track track;
  for (int k = 0; k < epoch_count; ++k) {
    track.positions.push_back(start + sample_period * double(k) * velocity);
    track.heading.push_back(heading);
    track.climb.push_back(climb);
  }
  return track;
}

Rotation ins_to_body_attitude(double heading, double climb,
                              const Rotation& drift_rotation) {
  const Rotation body_axes = Rotation::from_euler_zyx({heading, -climb, 0.0});
  return (drift_rotation * body_axes).inverse();
}

Scenario compose_scenario(const Track& broadcaster, const Track& receiver,
                          const Rotation& drift_rotation,
                          const Eigen::Vector3d& drift_translation,
                          const NoiseModel& noise, std::uint64_t noise_seed) {
  if (broadcaster.positions.empty())
    throw EmptyInputError("scenario needs at least one epoch");
  const std::size_t n = broadcaster.positions.size();
  if (receiver.positions.size() != n)
    throw ConfigError("track lengths differ");
  if (receiver.heading.size() != n || receiver.climb.size() != n)
    throw ConfigError("receiver track is missing attitude angles");
  if (noise.sigma_azimuth < 0.0 || noise.sigma_elevation < 0.0)
    throw NonPositiveScaleError("noise deviations must be non-negative");

  Scenario s;
  s.drift_rotation = drift_rotation;
  s.drift_translation = drift_translation;
  s.noise = noise;
  s.seed = noise_seed;

  std::mt19937_64 rng(noise_seed);
  const bool noisy = noise.sigma_azimuth > 0.0 || noise.sigma_elevation > 0.0;

  for (std::size_t i = 0; i < n; ++i) {
    const int k = int(i);
    const Eigen::Vector3d& pa = broadcaster.positions[i];
    const Eigen::Vector3d& pb = receiver.positions[i];
    const Eigen::Vector3d local = drift_rotation * pb + drift_translation;
    const Rotation attitude =
        ins_to_body_attitude(receiver.heading[i], receiver.climb[i],
                             drift_rotation);

    const Eigen::Vector3d sep =
        drift_rotation * pa + drift_translation - local;
    const auto [az, el] = unit_vector_to_doa(sep);
    const DoaMeasurement clean{az, el, local_ins_frame('B'), k};

    DoaMeasurement measured = clean;
    if (noisy) {
      const Eigen::Vector3d u_body = attitude * doa_to_unit_vector(clean);
      auto [baz, bel] = unit_vector_to_doa(u_body);
      baz += noise.sigma_azimuth * gauss(rng, 0.0, 1.0);
      bel += noise.sigma_elevation * gauss(rng, 0.0, 1.0);
      const Eigen::Vector3d back =
          attitude.inverse() * doa_to_unit_vector(baz, bel);
      const auto [naz, nel] = unit_vector_to_doa(back);
      measured.azimuth = naz;
      measured.elevation = nel;
    }

    s.epochs.push_back({k, pa, local, measured});
    s.noiseless_doa.push_back(clean);
    s.receiver_global.push_back(pb);
    s.attitudes.entries.push_back({attitude, Eigen::Vector3d::Zero(),
                                   body_centred_frame('B'),
                                   body_fixed_frame('B')});
  }
  return s;
}

Scenario generate_scenario(int epoch_count,
                           const TrajectoryParams& broadcaster_params,
                           const TrajectoryParams& receiver_params,
                           const DriftParams& drift, const NoiseModel& noise,
                           std::uint64_t seed) {
  if (epoch_count < 1) throw ConfigError("scenario needs at least one epoch");

  std::mt19937_64 rng(seed);
  const Track a = sample_track(
      rng, epoch_count, broadcaster_params,
      {0.0, 0.0, broadcaster_params.broadcaster_altitude});
  const Track b = sample_track(rng, epoch_count, receiver_params,
                               {receiver_params.horizontal_separation, 0.0,
                                receiver_params.receiver_altitude});

  std::uniform_real_distribution<double> angle_u(-drift.euler_range,
                                                 drift.euler_range);
  const EulerAngles euler{angle_u(rng), angle_u(rng), angle_u(rng)};
  std::uniform_real_distribution<double> shift_u(-drift.translation_range,
                                                 drift.translation_range);
  const Eigen::Vector3d t{shift_u(rng), shift_u(rng), shift_u(rng)};

  Scenario s = compose_scenario(a, b, Rotation::from_euler_zyx(euler), t,
                                noise, splitmix64(seed));
  s.seed = seed;
  return s;
}

Scenario generate_scenario(int epoch_count, const TrajectoryParams& params,
                           const DriftParams& drift, const NoiseModel& noise,
                           std::uint64_t seed) {
  return generate_scenario(epoch_count, params, params, drift, noise, seed);
}

Scenario scenario_prefix(const Scenario& scenario, int epoch_count) {
  const int n = int(scenario.epochs.size());
  if (epoch_count < 1 || epoch_count > n)
    throw ConfigError("prefix length out of range");
  Scenario out;
  out.epochs.assign(scenario.epochs.begin(),
                    scenario.epochs.begin() + epoch_count);
  out.noiseless_doa.assign(scenario.noiseless_doa.begin(),
                           scenario.noiseless_doa.begin() + epoch_count);
  out.receiver_global.assign(scenario.receiver_global.begin(),
                             scenario.receiver_global.begin() + epoch_count);
  out.attitudes.entries.assign(
      scenario.attitudes.entries.begin(),
      scenario.attitudes.entries.begin() + epoch_count);
  out.drift_rotation = scenario.drift_rotation;
  out.drift_translation = scenario.drift_translation;
  out.noise = scenario.noise;
  out.seed = scenario.seed;
  return out;
}

ErrorReport evaluate_estimate(const Rotation& rotation,
                              const Eigen::Vector3d& translation,
                              const Scenario& scenario) {
  ErrorReport report;
  report.rotation_error_rad =
      rotation_distance(rotation, scenario.drift_rotation);
  report.position_error = position_error(
      rotation, translation, scenario.epochs, scenario.receiver_global);
  report.reconstructed.reserve(scenario.epochs.size());
  const Eigen::Matrix3d rt = rotation.matrix().transpose();
  for (const auto& e : scenario.epochs)
    report.reconstructed.push_back(rt * (e.receiver_local - translation));
  return report;
}

std::vector<std::string> TrajectoryDiagnostics::warnings() const {
  std::vector<std::string> out;
  if (planar_broadcaster)
    out.push_back(
        "broadcaster track is planar: the stacked system loses rank and "
        "least squares cannot separate the pose");
  if (collinear_broadcaster)
    out.push_back(
        "broadcaster track is collinear: admissible poses form a circle of "
        "rotations about the track direction");
  if (parallel_doa)
    out.push_back(
        "arrival directions are parallel: range is unobservable and the "
        "translation is ambiguous");
  return out;
}

TrajectoryDiagnostics detect_unsuitable(
    const std::vector<MeasurementEpoch>& epochs) {
  const int n = int(epochs.size());
  if (n < 2) throw ConfigError("suitability checks need at least two epochs");

  Eigen::MatrixXd points(n, 3);
  for (int i = 0; i < n; ++i)
    points.row(i) = epochs[i].broadcaster_global.transpose();
  const Eigen::RowVector3d centroid = points.colwise().mean();
  points.rowwise() -= centroid;
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(points);
  const Eigen::VectorXd sv = svd.singularValues();
  const double s1 = sv(0);
  const double s2 = sv.size() > 1 ? sv(1) : 0.0;
  const double s3 = sv.size() > 2 ? sv(2) : 0.0;

  TrajectoryDiagnostics d;
  if (s1 <= kDegenerateLength) {
    d.planar_broadcaster = true;  // all positions coincide
    d.collinear_broadcaster = true;
  } else {
    d.plane_residual_ratio = s3 / s1;
    d.line_residual_ratio = s2 / s1;
    d.planar_broadcaster = d.plane_residual_ratio < kUnsuitableRelTol;
    d.collinear_broadcaster = d.line_residual_ratio < kUnsuitableRelTol;
  }

  std::vector<Eigen::Vector3d> units;
  units.reserve(n);
  for (const auto& e : epochs) units.push_back(doa_to_unit_vector(e.doa));
  double widest = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      // Angle between lines, so an about-face also counts as parallel.
      const double angle = std::atan2(units[i].cross(units[j]).norm(),
                                      std::abs(units[i].dot(units[j])));
      widest = std::max(widest, angle);
    }
  }
  d.max_doa_angle = widest;
  d.parallel_doa = widest < kUnsuitableRelTol;
  return d;
}

TrajectoryDiagnostics detect_unsuitable(const Scenario& scenario) {
  std::vector<MeasurementEpoch> clean = scenario.epochs;
  if (scenario.noiseless_doa.size() == clean.size()) {
    for (std::size_t i = 0; i < clean.size(); ++i)
      clean[i].doa = scenario.noiseless_doa[i];
  }
  return detect_unsuitable(clean);
}

std::string method_name(SolveMethod method) {
  switch (method) {
    case SolveMethod::kLs:
      return "ls";
    case SolveMethod::kSdp:
      return "sdp";
    case SolveMethod::kSdpMl:
      return "sdp+ml";
  }
  return "unknown";
}

std::optional<SolveMethod> parse_method(const std::string& name) {
  if (name == "ls") return SolveMethod::kLs;
  if (name == "sdp") return SolveMethod::kSdp;
  if (name == "sdp+ml") return SolveMethod::kSdpMl;
  return std::nullopt;
}

SolveReport solve_pose(const std::vector<MeasurementEpoch>& epochs,
                       const AttitudeLog& attitudes,
                       const SolveOptions& options) {
  if (epochs.empty()) throw EmptyInputError("solve_pose needs measurements");

  SolveReport report;
  report.method = options.method;

  const LinearSystem raw = assemble(epochs);
  LinearSystem sys = raw;
  if (!options.translation_shift.isZero(0.0))
    apply_shift(sys, options.translation_shift);

  double scale = options.translation_scale;
  if (scale <= 0.0) {
    double acc = 0.0;
    for (const auto& e : epochs)
      acc += 0.5 * (e.broadcaster_global.norm() + e.receiver_local.norm());
    scale = std::max(1.0, acc / double(epochs.size()));
  }
  apply_translation_scaling(sys, scale);

  if (options.method == SolveMethod::kLs) {
    const LsSolution ls = solve_ls(sys);
    report.ls_rank = ls.rank;
    report.ls_rank_deficient = ls.rank_deficient;
    const PoseVectorParts parts = split_pose_vector(ls.psi);
    const ProjectedRotation proj = closest_rotation(parts.rotation_block);
    report.rotation = proj.rotation;
    report.procrustes_degenerate = proj.degenerate_spectrum;
    report.translation =
        scale * parts.translation + options.translation_shift;
  } else {
    const LiftedProblem problem =
        lift(sys, options.full_constraints ? rotation_constraints()
                                           : independent_rotation_constraints());
    const SdpSolution solution = solve_relaxed(problem, options.relaxation);
    report.sdp_status = solution.status;
    report.sdp_iterations = solution.iterations;

    const ExtractedPose extracted = extract_pose_vector(solution.x);
    report.rank_ratio = extracted.rank_ratio;
    report.ambiguous = extracted.degenerate_top ||
                       extracted.rank_ratio > kAmbiguousRankRatio;
    const PoseVector psi = extracted.psi;
    const PoseVectorParts parts = split_pose_vector(psi);
    const ProjectedRotation proj = closest_rotation(parts.rotation_block);
    report.procrustes_degenerate = proj.degenerate_spectrum;
    report.sdp_rotation = proj.rotation;
    report.sdp_translation =
        scale * parts.translation + options.translation_shift;
    report.rotation = report.sdp_rotation;
    report.translation = report.sdp_translation;

    if (options.method == SolveMethod::kSdpMl) {
      NoiseModel weights = options.noise;
      if (weights.sigma_azimuth <= 0.0) weights.sigma_azimuth = deg_to_rad(1.0);
      if (weights.sigma_elevation <= 0.0)
        weights.sigma_elevation = 4.0 * weights.sigma_azimuth;

      AttitudeLog identity;
      const AttitudeLog* log = &attitudes;
      if (attitudes.entries.empty()) {
        identity = identity_attitudes(int(epochs.size()));
        log = &identity;
      }
      MlResult ml = refine(report.sdp_rotation, report.sdp_translation,
                           epochs, *log, weights, options.ml);
      report.rotation = ml.rotation;
      report.translation = ml.translation;
      report.ml_status = ml.status;
      report.gimbal_lock = ml.gimbal_lock;
      report.ml_trace = std::move(ml.trace);
    }
  }

  report.residual_norm =
      (raw.lhs * pack_pose(report.rotation, report.translation) - raw.rhs)
          .norm();
  return report;
}

namespace {

struct TrialOutcome {
  bool ok = false;
  double rotation_deg = 0.0;
  double position = 0.0;
};

TrialOutcome score(const Rotation& rotation, const Eigen::Vector3d& t,
                   const Scenario& scenario) {
  TrialOutcome out;
  const ErrorReport report = evaluate_estimate(rotation, t, scenario);
  out.rotation_deg = rad_to_deg(report.rotation_error_rad);
  out.position = report.position_error;
  out.ok = std::isfinite(out.rotation_deg) && std::isfinite(out.position);
  return out;
}

}  // namespace

CampaignResult monte_carlo(const CampaignConfig& config) {
  if (config.trials < 1) throw ConfigError("campaign needs at least one trial");
  if (config.k_min < 1 || config.k_max < config.k_min)
    throw ConfigError("campaign epoch range is empty");
  if (config.sigmas_deg.empty())
    throw ConfigError("campaign needs at least one noise level");
  for (double s : config.sigmas_deg)
    if (s < 0.0) throw ConfigError("noise levels must be non-negative");
  if (config.elevation_factor <= 0.0)
    throw ConfigError("elevation factor must be positive");
  if (config.methods.empty())
    throw ConfigError("campaign needs at least one method");

  const int k_count = config.k_max - config.k_min + 1;
  const int method_count = int(config.methods.size());
  const int task_count = int(config.sigmas_deg.size()) * config.trials;

  bool want_ls = false, want_sdp = false, want_ml = false;
  for (SolveMethod m : config.methods) {
    want_ls |= m == SolveMethod::kLs;
    want_sdp |= m == SolveMethod::kSdp;
    want_ml |= m == SolveMethod::kSdpMl;
  }

  std::vector<TrialOutcome> outcomes(std::size_t(task_count) * k_count *
                                     method_count);
  const auto slot = [&](int task, int k, int method_index) {
    return (std::size_t(task) * k_count + std::size_t(k - config.k_min)) *
               method_count +
           std::size_t(method_index);
  };

  const std::uint64_t base = splitmix64(config.seed);
  const auto run_task = [&](int task) {
    const int sigma_index = task / config.trials;
    const double sigma_az = deg_to_rad(config.sigmas_deg[sigma_index]);
    const NoiseModel noise{sigma_az, config.elevation_factor * sigma_az};
    const std::uint64_t trial_seed =
        splitmix64(base + std::uint64_t(task) + 1);
    try {
      const Scenario full =
          generate_scenario(config.k_max, config.trajectory, config.drift,
                            noise, trial_seed);
      for (int k = config.k_min; k <= config.k_max; ++k) {
        const Scenario sub = scenario_prefix(full, k);
        TrialOutcome ls_out, sdp_out, ml_out;

        if (want_ls) {
          try {
            SolveOptions opts;
            opts.method = SolveMethod::kLs;
            const SolveReport rep =
                solve_pose(sub.epochs, sub.attitudes, opts);
            if (!rep.ls_rank_deficient)
              ls_out = score(rep.rotation, rep.translation, sub);
          } catch (const std::exception&) {
          }
        }

        if (want_sdp || want_ml) {
          SolveOptions opts;
          opts.method = want_ml ? SolveMethod::kSdpMl : SolveMethod::kSdp;
          opts.noise = noise;
          try {
            const SolveReport rep =
                solve_pose(sub.epochs, sub.attitudes, opts);
            if (rep.sdp_status != SdpStatus::kNumericalTrouble) {
              sdp_out = score(rep.sdp_rotation, rep.sdp_translation, sub);
              if (want_ml) ml_out = score(rep.rotation, rep.translation, sub);
            }
          } catch (const std::exception&) {
            if (want_ml && want_sdp) {
              // The refinement may have failed after a usable relaxation;
              // rerun the cheap part so only the refined row is lost.
              try {
                SolveOptions plain;
                plain.method = SolveMethod::kSdp;
                const SolveReport rep =
                    solve_pose(sub.epochs, sub.attitudes, plain);
                if (rep.sdp_status != SdpStatus::kNumericalTrouble)
                  sdp_out = score(rep.rotation, rep.translation, sub);
              } catch (const std::exception&) {
              }
            }
          }
        }

        for (int m = 0; m < method_count; ++m) {
          switch (config.methods[m]) {
            case SolveMethod::kLs:
              outcomes[slot(task, k, m)] = ls_out;
              break;
            case SolveMethod::kSdp:
              outcomes[slot(task, k, m)] = sdp_out;
              break;
            case SolveMethod::kSdpMl:
              outcomes[slot(task, k, m)] = ml_out;
              break;
          }
        }
      }
    } catch (const std::exception&) {
      // Scenario generation failed; every cell of this task stays a failure.
    }
  };

  const int threads =
      std::min(std::max(1, config.threads), std::max(1, task_count));
  if (threads == 1) {
    for (int task = 0; task < task_count; ++task) run_task(task);
  } else {
    std::atomic<int> next{0};
    const auto worker = [&] {
      for (;;) {
        const int task = next.fetch_add(1);
        if (task >= task_count) return;
        run_task(task);
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  CampaignResult result;
  result.cells.reserve(std::size_t(config.sigmas_deg.size()) * k_count *
                       method_count);
  for (std::size_t si = 0; si < config.sigmas_deg.size(); ++si) {
    for (int k = config.k_min; k <= config.k_max; ++k) {
      for (int m = 0; m < method_count; ++m) {
        CampaignCell cell;
        cell.sigma_deg = config.sigmas_deg[si];
        cell.epoch_count = k;
        cell.method = config.methods[m];
        std::vector<double> rotations, positions;
        for (int trial = 0; trial < config.trials; ++trial) {
          const int task = int(si) * config.trials + trial;
          const TrialOutcome& out = outcomes[slot(task, k, m)];
          if (out.ok) {
            rotations.push_back(out.rotation_deg);
            positions.push_back(out.position);
            ++cell.successes;
          } else {
            ++cell.failures;
          }
        }
        cell.median_rotation_error_deg = median(std::move(rotations));
        cell.median_position_error = median(std::move(positions));
        result.cells.push_back(cell);
      }
    }
  }
  return result;
}

}  // namespace doalign
