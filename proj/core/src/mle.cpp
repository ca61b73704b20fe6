#include "doalign/mle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "doalign/errors.hpp"
#include "doalign/metrics.hpp"

namespace doalign {

namespace {

constexpr int kMaxBacktracks = 60;

void check_alignment(const std::vector<MeasurementEpoch>& epochs,
                     const AttitudeLog& attitudes) {
  if (attitudes.entries.size() != epochs.size()) {
    throw ConfigError("attitude log has " +
                      std::to_string(attitudes.entries.size()) +
                      " entries for " + std::to_string(epochs.size()) +
                      " epochs");
  }
}

void check_index(int index, const std::vector<MeasurementEpoch>& epochs) {
  if (index < 0 || std::size_t(index) >= epochs.size()) {
    throw ConfigError("epoch index " + std::to_string(index) +
                      " out of range");
  }
}

void check_noise(const NoiseModel& noise) {
  if (!(noise.sigma_azimuth > 0.0) || !(noise.sigma_elevation > 0.0)) {
    throw NonPositiveScaleError("noise sigmas must be positive");
  }
}

Eigen::Vector3d body_separation(const MeasurementEpoch& e, const Pose& att,
                                const Rotation& rotation,
                                const Eigen::Vector3d& translation) {
  const Eigen::Vector3d ins =
      rotation * e.broadcaster_global + translation - e.receiver_local;
  return att.rotation * ins + att.translation;
}

/// Likelihood as a function of the six descent parameters, with the
/// rotation factored as from_euler_zyx(params) * anchor so the anchor can
/// be moved away from the gimbal seam mid-descent.
struct Objective {
  const std::vector<MeasurementEpoch>& epochs;
  const AttitudeLog& attitudes;
  const NoiseModel& noise;
  Rotation anchor;

  Rotation rotation_at(const MlParams& p) const {
    return Rotation::from_euler_zyx({p(0), p(1), p(2)}) * anchor;
  }

  double operator()(const MlParams& p) const {
    return negative_log_likelihood(rotation_at(p), p.tail<3>(), epochs,
                                   attitudes, noise);
  }
};

template <typename F>
MlParams central_differences(const F& f, const MlParams& p) {
  MlParams g;
  for (int i = 0; i < 6; ++i) {
    const double h = i < 3 ? kFdStepAngle : kFdStepLength;
    MlParams hi = p;
    MlParams lo = p;
    hi(i) += h;
    lo(i) -= h;
    g(i) = (f(hi) - f(lo)) / (2.0 * h);
  }
  return g;
}

}  // namespace

AttitudeLog identity_attitudes(int epoch_count, char agent) {
  AttitudeLog log;
  log.entries.reserve(std::max(epoch_count, 0));
  for (int i = 0; i < epoch_count; ++i) {
    log.entries.push_back({Rotation::identity(), Eigen::Vector3d::Zero(),
                           body_centred_frame(agent),
                           body_fixed_frame(agent)});
  }
  return log;
}

DoaMeasurement predict_body_doa(int index, const Rotation& rotation,
                                const Eigen::Vector3d& translation,
                                const std::vector<MeasurementEpoch>& epochs,
                                const AttitudeLog& attitudes) {
  check_alignment(epochs, attitudes);
  check_index(index, epochs);
  const MeasurementEpoch& e = epochs[index];
  const Pose& att = attitudes.entries[index];
  const auto [az, el] =
      unit_vector_to_doa(body_separation(e, att, rotation, translation));
  return {az, el, body_fixed_frame(att.to.agent), e.k};
}

DoaMeasurement measured_body_doa(int index,
                                 const std::vector<MeasurementEpoch>& epochs,
                                 const AttitudeLog& attitudes) {
  check_alignment(epochs, attitudes);
  check_index(index, epochs);
  const MeasurementEpoch& e = epochs[index];
  const Pose& att = attitudes.entries[index];
  const auto [az, el] =
      unit_vector_to_doa(att.rotation * doa_to_unit_vector(e.doa));
  return {az, el, body_fixed_frame(att.to.agent), e.k};
}

double negative_log_likelihood(const Rotation& rotation,
                               const Eigen::Vector3d& translation,
                               const std::vector<MeasurementEpoch>& epochs,
                               const AttitudeLog& attitudes,
                               const NoiseModel& noise) {
  check_noise(noise);
  if (epochs.empty()) {
    throw EmptyInputError("the likelihood needs at least one epoch");
  }
  check_alignment(epochs, attitudes);

  const double wa = 1.0 / (2.0 * noise.sigma_azimuth * noise.sigma_azimuth);
  const double we =
      1.0 / (2.0 * noise.sigma_elevation * noise.sigma_elevation);
  double sum = 0.0;
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    const MeasurementEpoch& e = epochs[i];
    const Pose& att = attitudes.entries[i];
    const Eigen::Vector3d u_body = att.rotation * doa_to_unit_vector(e.doa);
    const auto [meas_az, meas_el] = unit_vector_to_doa(u_body);
    const auto [pred_az, pred_el] = unit_vector_to_doa(
        body_separation(e, att, rotation, translation));
    const double da = wrap_angle(meas_az - pred_az);
    const double de = wrap_angle(meas_el - pred_el);
    sum += wa * da * da + we * de * de;
  }
  return sum;
}

MlParams nll_gradient(const MlParams& params,
                      const std::vector<MeasurementEpoch>& epochs,
                      const AttitudeLog& attitudes, const NoiseModel& noise) {
  const Objective f{epochs, attitudes, noise, Rotation::identity()};
  return central_differences(f, params);
}

MlResult refine(const Rotation& initial_rotation,
                const Eigen::Vector3d& initial_translation,
                const std::vector<MeasurementEpoch>& epochs,
                const AttitudeLog& attitudes, const NoiseModel& noise,
                const MlOptions& options, const RefineTruth* truth) {
  Objective f{epochs, attitudes, noise, Rotation::identity()};
  MlParams p;
  const EulerAngles e0 = initial_rotation.euler_zyx();
  p << e0.yaw, e0.pitch, e0.roll, initial_translation;

  // A metre moves the predicted angles ~1/separation as much as a radian
  // does, so raw steepest descent crawls along the translation valley.
  // Measuring translation steps in units of the mean separation (a fixed
  // diagonal preconditioner) equilibrates the two subspaces.
  double mean_separation = 0.0;
  if (!epochs.empty() && attitudes.entries.size() == epochs.size()) {
    for (std::size_t i = 0; i < epochs.size(); ++i) {
      mean_separation += body_separation(epochs[i], attitudes.entries[i],
                                         initial_rotation,
                                         initial_translation)
                             .norm();
    }
    mean_separation /= double(epochs.size());
  }
  const double t_unit = std::max(1.0, mean_separation);
  MlParams precond;
  precond << 1.0, 1.0, 1.0, t_unit * t_unit, t_unit * t_unit,
      t_unit * t_unit;

  MlResult out;
  const double seam = std::numbers::pi / 2 - kGimbalLockMargin;
  const auto reanchor_if_needed = [&] {
    if (std::abs(p(1)) > seam) {
      out.gimbal_lock = true;
      f.anchor = f.rotation_at(p);
      p.head<3>().setZero();
    }
  };
  reanchor_if_needed();

  // Returned unchanged when no step improves on the start; the Euler
  // round trip would otherwise cost a few ulps of rotation accuracy.
  double value = f(p);
  out.rotation = initial_rotation;
  out.translation = initial_translation;
  double best_value = value;

  std::vector<double> history{value};
  const auto record = [&](int iteration, double gradient_norm) {
    MlState s;
    const Rotation r = f.rotation_at(p);
    const EulerAngles e = r.euler_zyx();
    s.params << e.yaw, e.pitch, e.roll, p.tail<3>();
    s.nll = value;
    s.gradient_norm = gradient_norm;
    s.iteration = iteration;
    if (truth != nullptr) {
      s.rotation_error = rotation_distance(r, truth->rotation);
      s.position_error =
          position_error(r, p.tail<3>(), epochs, truth->receiver_global);
    }
    out.trace.push_back(s);
  };

  for (int iter = 0;; ++iter) {
    const MlParams g = central_differences(f, p);
    const double gnorm = g.norm();
    record(iter, gnorm);
    if (value < best_value) {
      best_value = value;
      out.rotation = f.rotation_at(p);
      out.translation = p.tail<3>();
    }
    if (gnorm < options.gradient_tolerance) {
      out.status = MlStatus::kConverged;
      break;
    }
    if (iter >= options.max_iterations) {
      out.status = MlStatus::kMaxIterations;
      break;
    }
    if (iter >= options.stall_window) {
      const double past = history[iter - options.stall_window];
      if (past - value <
          options.stall_tolerance * std::max(1.0, std::abs(past))) {
        out.status = MlStatus::kStalled;
        break;
      }
    }

    double step = options.initial_step;
    const MlParams direction = precond.cwiseProduct(g);
    const double slope = g.dot(direction);
    bool accepted = false;
    MlParams candidate;
    double candidate_value = value;
    for (int bt = 0; bt < kMaxBacktracks; ++bt) {
      candidate = p - step * direction;
      candidate_value = f(candidate);
      if (candidate_value <= value - options.armijo_constant * step * slope) {
        accepted = true;
        break;
      }
      step *= options.backtrack_shrink;
    }
    if (!accepted) {
      // No step of any length decreases the objective: numerically at a
      // minimum even though the gradient tolerance was not met.
      out.status = MlStatus::kStalled;
      break;
    }
    p = candidate;
    value = candidate_value;
    history.push_back(value);
    reanchor_if_needed();
  }
  return out;
}

}  // namespace doalign
