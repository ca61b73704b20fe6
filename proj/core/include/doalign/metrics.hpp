#pragma once

#include <Eigen/Core>
#include <vector>

#include "doalign/geometry.hpp"
#include "doalign/linear_system.hpp"

namespace doalign {

/// Normalised reconstruction error of the receiver track. The estimated
/// global positions R^T (p_ins - t) are compared against the true ones and
/// the mean offset is divided by the mean inter-agent separation, so the
/// result is dimensionless and 1.0 means "off by one typical aircraft
/// distance". Throws EmptyInputError without epochs, ConfigError when the
/// truth track length differs, DegenerateVectorError when the agents
/// coincide and the normalisation is undefined.
double position_error(const Rotation& rotation,
                      const Eigen::Vector3d& translation,
                      const std::vector<MeasurementEpoch>& epochs,
                      const std::vector<Eigen::Vector3d>& receiver_global);

}  // namespace doalign
