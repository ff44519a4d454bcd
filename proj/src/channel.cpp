#include "uavisac/channel.hpp"

#include <algorithm>
#include <cmath>

namespace uavisac {

CommChannel comm_channel(const UavState& uav, const GroundNode& node, double wavelength, double ref_gain) {
  const double d = (node.position - uav.position).norm();
  if (d <= 0.0) throw Error("comm_channel: zero UAV-node distance");
  const Vec3 axis = level_axis(uav.attitude, uav.array_heading);
  const double theta = steering_angle(uav.position, axis, node.position);
  return {std::sqrt(ref_gain) / d * steering_vector(uav.array, theta, wavelength), d};
}

LinkTable::LinkTable(const WorldState& world, const ScenarioConfig& cfg)
    : uavs_(static_cast<int>(world.uavs.size())), nodes_(static_cast<int>(world.nodes.size())) {
  links_.reserve(static_cast<std::size_t>(uavs_ * nodes_));
  steering_.reserve(links_.capacity());
  const double amp = std::sqrt(cfg.ref_channel_gain);
  for (const auto& uav : world.uavs) {
    uav.array.validate();
    const Vec3 axis = level_axis(uav.attitude, uav.array_heading);
    for (const auto& node : world.nodes) {
      const Vec3 diff = node.position - uav.position;
      const double d = diff.norm();
      if (d <= 0.0) throw Error("LinkTable: zero UAV-node distance");
      const double cos_theta = std::clamp(axis.dot(diff) / d, -1.0, 1.0);
      CVec a = steering_vector_cos(uav.array.offsets, cos_theta, cfg.wavelength);
      links_.push_back({amp / d * a, d});
      steering_.push_back(std::move(a));
    }
  }
}

BeamPlan::BeamPlan(int uav_count, int node_count, int antenna_count)
    : uavs_(uav_count),
      nodes_(node_count),
      antennas_(antenna_count),
      beams_(static_cast<std::size_t>(uav_count * node_count),
             CVec::Constant(antenna_count, Complex(1.0 / std::sqrt(static_cast<double>(antenna_count)), 0.0))),
      rho_(static_cast<std::size_t>(uav_count * node_count), 0.0) {}

void BeamPlan::set(int uav, int node, const CVec& w, double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw Error("BeamPlan: power ratio outside [0, 1]");
  if (w.size() != antennas_) throw Error("BeamPlan: beam length does not match antenna count");
  const double n = w.norm();
  beams_[index(uav, node)] =
      n > 0.0 ? CVec(w / n) : CVec::Constant(antennas_, Complex(1.0 / std::sqrt(static_cast<double>(antennas_)), 0.0));
  rho_[index(uav, node)] = rho;
}

void BeamPlan::clear(int uav, int node) { rho_[index(uav, node)] = 0.0; }

bool BeamPlan::consistent_with(const AssociationMatrix& assoc, double tol) const {
  for (int n = 0; n < uavs_; ++n)
    for (int k = 0; k < nodes_; ++k) {
      if (!assoc(n, k) && rho(n, k) != 0.0) return false;
      if (std::abs(beam(n, k).norm() - 1.0) > tol) return false;
    }
  return true;
}

double link_power(double rho, const CVec& w, double max_power) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw Error("link_power: power ratio outside [0, 1]");
  return rho * rho * w.squaredNorm() * max_power;
}

double comm_sinr(int k, const LinkTable& links, const BeamPlan& beams, const AssociationMatrix& assoc,
                 int comm_count, double max_power, double noise_power, InterferenceModel model) {
  const int n = assoc.serving_uav(k);
  const CVec& h_k = links.channel(n, k).h;
  const double signal = std::norm(h_k.dot(beams.beam(n, k))) * beams.rho(n, k) * beams.rho(n, k) * max_power;
  if (signal == 0.0) return 0.0;

  double interference = 0.0;
  for (int m = 0; m < links.uav_count(); ++m) {
    for (int l = 0; l < comm_count; ++l) {
      if (l == k || !assoc(m, l)) continue;
      const double rho = beams.rho(m, l);
      if (rho == 0.0) continue;
      const CVec& h = model == InterferenceModel::kReceived ? links.channel(m, k).h : links.channel(m, l).h;
      interference += std::norm(h.dot(beams.beam(m, l))) * rho * rho * max_power;
    }
  }
  return signal / (interference + noise_power);
}

double rate(double sinr, double bandwidth) {
  if (!(sinr >= 0.0)) throw Error("rate: negative SINR");
  return bandwidth * std::log2(1.0 + sinr);
}

std::vector<double> comm_sinrs(const LinkTable& links, const BeamPlan& beams, const AssociationMatrix& assoc,
                               int comm_count, double max_power, double noise_power, InterferenceModel model) {
  std::vector<double> out(static_cast<std::size_t>(comm_count));
  for (int k = 0; k < comm_count; ++k)
    out[static_cast<std::size_t>(k)] = comm_sinr(k, links, beams, assoc, comm_count, max_power, noise_power, model);
  return out;
}

double sum_rate(const WorldState& world, const BeamPlan& beams, const AssociationMatrix& assoc,
                const ScenarioConfig& cfg) {
  const LinkTable links(world, cfg);
  double total = 0.0;
  for (double g : comm_sinrs(links, beams, assoc, world.comm_count(), cfg.max_tx_power_w, cfg.comm_noise_w,
                             cfg.interference))
    total += rate(g, cfg.bandwidth_hz);
  return total;
}

}  // namespace uavisac
