#include "doalign/metrics.hpp"

#include "doalign/errors.hpp"

namespace doalign {

double position_error(const Rotation& rotation,
                      const Eigen::Vector3d& translation,
                      const std::vector<MeasurementEpoch>& epochs,
                      const std::vector<Eigen::Vector3d>& receiver_global) {
  if (epochs.empty()) {
    throw EmptyInputError("position_error needs at least one epoch");
  }
  if (receiver_global.size() != epochs.size()) {
    throw ConfigError("truth track has " +
                      std::to_string(receiver_global.size()) +
                      " entries for " + std::to_string(epochs.size()) +
                      " epochs");
  }
  const Eigen::Matrix3d to_global = rotation.matrix().transpose();
  double offset_sum = 0.0;
  double separation_sum = 0.0;
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    const Eigen::Vector3d reconstructed =
        to_global * (epochs[i].receiver_local - translation);
    offset_sum += (reconstructed - receiver_global[i]).norm();
    separation_sum +=
        (epochs[i].broadcaster_global - receiver_global[i]).norm();
  }
  const double mean_separation = separation_sum / double(epochs.size());
  if (mean_separation <= kDegenerateLength) {
    throw DegenerateVectorError(
        "agents coincide; the error normalisation is undefined");
  }
  return offset_sum / (double(epochs.size()) * mean_separation);
}

}  // namespace doalign
