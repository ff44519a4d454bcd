#pragma once

#include <vector>

#include "uavisac/association.hpp"
#include "uavisac/scenario.hpp"

namespace uavisac {

struct CommChannel {
  CVec h;
  double distance = 0.0;
};

/// Free-space LoS channel sqrt(beta_0 / d^2) * a(theta); theta is taken against
/// the UAV's levelled array axis.
CommChannel comm_channel(const UavState& uav, const GroundNode& node, double wavelength, double ref_gain);

/// Channels and steering vectors for every UAV-node pair of a world snapshot.
class LinkTable {
 public:
  LinkTable() = default;
  LinkTable(const WorldState& world, const ScenarioConfig& cfg);

  const CommChannel& channel(int uav, int node) const { return links_[index(uav, node)]; }
  /// Unit-modulus steering vector (channel without the path-loss amplitude).
  const CVec& steering(int uav, int node) const { return steering_[index(uav, node)]; }
  int uav_count() const { return uavs_; }
  int node_count() const { return nodes_; }

 private:
  std::size_t index(int uav, int node) const { return static_cast<std::size_t>(uav * nodes_ + node); }
  int uavs_ = 0;
  int nodes_ = 0;
  std::vector<CommChannel> links_;
  std::vector<CVec> steering_;
};

/// Unit-norm beams and power ratios for every UAV-node pair; zero for pairs
/// that are not associated.
class BeamPlan {
 public:
  BeamPlan() = default;
  BeamPlan(int uav_count, int node_count, int antenna_count);

  const CVec& beam(int uav, int node) const { return beams_[index(uav, node)]; }
  double rho(int uav, int node) const { return rho_[index(uav, node)]; }
  /// Stores w / |w| (uniform beam when w is zero) and rho, which must lie in [0, 1].
  void set(int uav, int node, const CVec& w, double rho);
  void clear(int uav, int node);

  int uav_count() const { return uavs_; }
  int node_count() const { return nodes_; }
  int antenna_count() const { return antennas_; }

  /// rho = 0 on every non-associated pair and every stored beam is unit norm.
  bool consistent_with(const AssociationMatrix& assoc, double tol = 1e-9) const;

 private:
  std::size_t index(int uav, int node) const { return static_cast<std::size_t>(uav * nodes_ + node); }
  int uavs_ = 0;
  int nodes_ = 0;
  int antennas_ = 0;
  std::vector<CVec> beams_;
  std::vector<double> rho_;
};

/// rho^2 |w|^2 P_max.
double link_power(double rho, const CVec& w, double max_power);

/// SINR of comm user `k`. Only comm users (indices < comm_count) transmit in the
/// communication sub-slot.
double comm_sinr(int k, const LinkTable& links, const BeamPlan& beams, const AssociationMatrix& assoc,
                 int comm_count, double max_power, double noise_power, InterferenceModel model);

/// B log2(1 + gamma).
double rate(double sinr, double bandwidth);

/// Per-user SINRs of all comm users.
std::vector<double> comm_sinrs(const LinkTable& links, const BeamPlan& beams, const AssociationMatrix& assoc,
                               int comm_count, double max_power, double noise_power, InterferenceModel model);

/// Sum of B log2(1 + gamma_k) over comm users.
double sum_rate(const WorldState& world, const BeamPlan& beams, const AssociationMatrix& assoc,
                const ScenarioConfig& cfg);

}  // namespace uavisac
