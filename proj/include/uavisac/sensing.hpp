#pragma once

#include <span>
#include <vector>

#include "uavisac/channel.hpp"

namespace uavisac {

/// Bistatic link tx -> target -> rx. The echo matrix is H = gain * a_rx a_tx^H,
/// so a transmit beam w couples through a_tx^H w and the echo arrives along a_rx.
struct SensingLink {
  int tx = 0;
  int rx = 0;
  int target = 0;
  double gain = 0.0;  ///< sqrt(kappa^2 rcs / (d_tx^2 d_rx^2))
  CVec a_tx;
  CVec a_rx;

  CMat matrix() const { return gain * a_rx * a_tx.adjoint(); }
};

/// Bistatic amplitude gain sqrt(kappa^2 * rcs / (d_tx^2 * d_rx^2)).
double bistatic_gain(double kappa, double rcs, double d_tx, double d_rx);

SensingLink make_sensing_link(const LinkTable& links, int tx, int rx, int target, double kappa, double rcs);

struct ClutterScatterer {
  int user = 0;
  double coefficient = 0.0;
  CVec a_tx;  ///< tx UAV steering towards the scatterer
  CVec a_rx;  ///< rx UAV steering towards the scatterer
};

struct ClutterSet {
  std::vector<ClutterScatterer> members;
};

/// Comm users whose ground range-sum to the tx/rx ground projections is within
/// (1 + slack) of the target's. The target itself is never a member.
std::vector<int> clutter_members(const Vec3& tx, const Vec3& rx, const Vec3& target,
                                 std::span<const GroundNode> comm_users, double slack);

/// Builds the clutter set for a link. `draws[k]` in [0, 1] scales the coefficient
/// of comm user k to draws[k] * scale * link.gain.
ClutterSet clutter_set(const SensingLink& link, const WorldState& world, const LinkTable& links,
                       std::span<const double> draws, double scale, double slack);

/// u = a_rx / |a_rx|.
CVec receive_beamformer(const CVec& a_rx);

/// Gamma = |u^H H w|^2 / (sum_c |u^H rho_0 a_rx,c a_tx,c^H w|^2 + noise). `w` carries the
/// transmit amplitude (unit beam scaled by rho * sqrt(P_max)).
double sensing_sinr(const SensingLink& link, const CVec& w, const ClutterSet& clutter, double noise_power);

bool sensing_feasible(double sinr, double threshold);

/// Receiver for a target's echo. When other UAVs share the transmitter's cluster
/// the nearest other UAV is used; otherwise the other UAV with the smallest
/// (cluster size, distance to target).
int select_receiver(int target, const AssociationMatrix& assoc, const ClusterAssignment& assignment,
                    const WorldState& world);

}  // namespace uavisac
