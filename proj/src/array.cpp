#include "uavisac/array.hpp"

#include <algorithm>
#include <cmath>

namespace uavisac {

bool ArrayGeometry::feasible(double tol) const {
  for (std::size_t m = 0; m < offsets.size(); ++m) {
    if (!std::isfinite(offsets[m]) || std::abs(offsets[m]) > max_offset + tol) return false;
    if (m > 0 && offsets[m] - offsets[m - 1] < min_spacing - tol) return false;
    if (m > 0 && offsets[m] < offsets[m - 1]) return false;
  }
  return true;
}

void ArrayGeometry::validate() const {
  if (offsets.empty()) throw Error("array geometry: no elements");
  if (!feasible()) throw Error("array geometry: offsets violate extent or spacing constraints");
}

ArrayGeometry uniform_geometry(int count, double max_offset, double min_spacing) {
  if (count < 1) throw Error("array geometry: count must be >= 1");
  ArrayGeometry g{std::vector<double>(static_cast<std::size_t>(count), 0.0), max_offset, min_spacing};
  if (count > 1) {
    const double step = 2.0 * max_offset / (count - 1);
    if (step < min_spacing) throw Error("array geometry: infeasible, (M-1)*D_min > 2*D_off");
    for (int m = 0; m < count; ++m) g.offsets[m] = -max_offset + step * m;
  }
  return g;
}

ArrayGeometry project_geometry(std::span<const double> raw, double max_offset, double min_spacing) {
  const auto count = raw.size();
  if (count == 0) throw Error("array geometry: no elements");
  if (static_cast<double>(count - 1) * min_spacing > 2.0 * max_offset)
    throw Error("array geometry: infeasible, (M-1)*D_min > 2*D_off");

  ArrayGeometry g{std::vector<double>(raw.begin(), raw.end()), max_offset, min_spacing};
  auto& r = g.offsets;
  for (double& x : r) {
    if (!std::isfinite(x)) x = 0.0;
    x = std::clamp(x, -max_offset, max_offset);
  }
  std::sort(r.begin(), r.end());
  for (std::size_t m = 1; m < count; ++m) r[m] = std::max(r[m], r[m - 1] + min_spacing);
  if (r.back() > max_offset) {
    r.back() = max_offset;
    for (std::size_t m = count - 1; m-- > 0;) r[m] = std::min(r[m], r[m + 1] - min_spacing);
  }
  return g;
}

Mat3 rotation_matrix(const Attitude& att) {
  const double cf = std::cos(att.roll), sf = std::sin(att.roll);
  const double cp = std::cos(att.pitch), sp = std::sin(att.pitch);
  const double cy = std::cos(att.yaw), sy = std::sin(att.yaw);
  Mat3 r;
  r << cp * cy, cy * sp * sf - sy * cf, cy * sp * cf + sy * sf,
       cp * sy, sy * sp * sf + cy * cf, sy * sp * cf - cy * sf,
       -sp,     sf * cp,                cf * cp;
  return r;
}

CompensationInputs compensation_inputs(const Mat3& r, double heading) {
  const Vec3 v(std::cos(heading), std::sin(heading), 0.0);
  const Vec3 rv = r * v;
  const Vec3 rl = r.col(2);
  return {-rv.z(), rl.cross(rv).z()};
}

CompensationAngle compensation_angle(double p, double q) {
  if (p == 0.0 && q == 0.0) return {0.0, true};
  if (q > 0.0) return {std::atan(p / q), false};
  if (q < 0.0) return {std::atan(p / q) + (p >= 0.0 ? kPi : -kPi), false};
  return {p > 0.0 ? kPi / 2 : -kPi / 2, false};
}

Vec3 compensated_axis(const Mat3& r, double heading, double mu) {
  const Vec3 v(std::cos(heading), std::sin(heading), 0.0);
  const Vec3 rv = r * v;
  const Vec3 k = r.col(2);
  // Rodrigues with k orthogonal to rv, so the k(k.v) term vanishes.
  return rv * std::cos(mu) + k.cross(rv) * std::sin(mu);
}

Vec3 level_axis(const Attitude& att, double heading) {
  const Mat3 r = rotation_matrix(att);
  const auto [p, q] = compensation_inputs(r, heading);
  return compensated_axis(r, heading, compensation_angle(p, q).mu);
}

double steering_angle(const Vec3& uav_position, const Vec3& axis, const Vec3& node_position) {
  const Vec3 d = node_position - uav_position;
  const double n = d.norm();
  if (n == 0.0) throw Error("steering angle: UAV and node positions coincide");
  return std::acos(std::clamp(axis.dot(d) / n, -1.0, 1.0));
}

CVec steering_vector_cos(std::span<const double> offsets, double cos_theta, double wavelength) {
  const double k = 2.0 * kPi / wavelength * cos_theta;
  CVec a(static_cast<Eigen::Index>(offsets.size()));
  for (std::size_t m = 0; m < offsets.size(); ++m) a[m] = std::polar(1.0, k * offsets[m]);
  return a;
}

CVec steering_vector(const ArrayGeometry& geometry, double theta, double wavelength) {
  geometry.validate();
  return steering_vector_cos(geometry.offsets, std::cos(theta), wavelength);
}

}  // namespace uavisac
