#pragma once

#include <span>
#include <vector>

#include "uavisac/types.hpp"

namespace uavisac {

/// Element offsets along the movable 1-D segment, relative to its center.
struct ArrayGeometry {
  std::vector<double> offsets;
  double max_offset = 0.0;
  double min_spacing = 0.0;

  int size() const { return static_cast<int>(offsets.size()); }
  bool feasible(double tol = 1e-12) const;
  /// Throws Error when the offsets break the extent or spacing constraints.
  void validate() const;
};

/// Equally spaced offsets spanning [-max_offset, max_offset]: the fixed-array baseline.
ArrayGeometry uniform_geometry(int count, double max_offset, double min_spacing);

/// Maps arbitrary raw offsets onto a feasible geometry. Sorts, clips into the
/// segment, then pushes elements apart left-to-right and, if the last element
/// overshoots, right-to-left. Feasible inputs are returned unchanged.
ArrayGeometry project_geometry(std::span<const double> raw, double max_offset, double min_spacing);

struct Attitude {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;
};

/// R = Rz(yaw) * Ry(pitch) * Rx(roll).
Mat3 rotation_matrix(const Attitude& att);

struct CompensationInputs {
  double p = 0.0;
  double q = 0.0;
};

/// P = -(R v).e_z and Q = ((R e_z) x (R v)).e_z with v = (cos heading, sin heading, 0).
CompensationInputs compensation_inputs(const Mat3& r, double heading);

struct CompensationAngle {
  double mu = 0.0;
  bool degenerate = false;  ///< P = Q = 0: the array is already level
};

/// Active rotation that levels the array; the piecewise arctangent of P/Q.
CompensationAngle compensation_angle(double p, double q);

/// Array axis after rotating R v by `mu` about the array normal R e_z.
Vec3 compensated_axis(const Mat3& r, double heading, double mu);

/// Convenience: rotation, compensation angle and compensated axis in one call.
Vec3 level_axis(const Attitude& att, double heading);

/// Angle between the array axis and the direction from the UAV to the node, in [0, pi].
double steering_angle(const Vec3& uav_position, const Vec3& axis, const Vec3& node_position);

/// a_m = exp(j 2 pi / lambda * r_m * cos(theta)).
CVec steering_vector(const ArrayGeometry& geometry, double theta, double wavelength);

/// Same as steering_vector, taking cos(theta) directly.
CVec steering_vector_cos(std::span<const double> offsets, double cos_theta, double wavelength);

}  // namespace uavisac
