// Random worlds and plans for the tests.
#pragma once

#include <random>

#include "uavisac/association.hpp"
#include "uavisac/channel.hpp"
#include "uavisac/scenario.hpp"

namespace fixture {

using namespace uavisac;

inline ScenarioConfig small_config(int uavs, int users, int targets) {
  ScenarioConfig cfg = table1_config();
  cfg.uav_count = uavs;
  cfg.comm_user_count = users;
  cfg.target_count = targets;
  cfg.validate();
  return cfg;
}

// UAVs anywhere in the flight box with random attitudes and geometries; nodes
// anywhere on the ground, comm users first.
inline WorldState random_world(const ScenarioConfig& cfg, Rng& rng) {
  std::uniform_real_distribution<double> xy(0.0, cfg.area_side), z(cfg.z_min, cfg.z_max);
  std::uniform_real_distribution<double> off(-cfg.max_offset, cfg.max_offset), head(0.0, 2 * kPi);
  WorldState w;
  for (int n = 0; n < cfg.uav_count; ++n) {
    UavState u;
    u.position = Vec3(xy(rng), xy(rng), z(rng));
    u.attitude = sample_attitude(30.0, rng);
    std::vector<double> raw(static_cast<std::size_t>(cfg.antenna_count));
    for (auto& r : raw) r = off(rng);
    u.array = project_geometry(raw, cfg.max_offset, cfg.min_spacing);
    u.array_heading = head(rng);
    w.uavs.push_back(u);
  }
  for (int k = 0; k < cfg.comm_user_count + cfg.target_count; ++k) {
    GroundNode g;
    g.id = k;
    g.kind = k < cfg.comm_user_count ? NodeKind::kCommUser : NodeKind::kSensingTarget;
    g.position = Vec3(xy(rng), xy(rng), 0.0);
    w.nodes.push_back(g);
  }
  return w;
}

inline AssociationMatrix random_association(int uavs, int nodes, Rng& rng) {
  AssociationMatrix a(uavs, nodes);
  std::uniform_int_distribution<int> pick(0, uavs - 1);
  for (int k = 0; k < nodes; ++k) a.assign(k, pick(rng));
  return a;
}

inline CVec random_beam(int m, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  CVec w(m);
  for (int i = 0; i < m; ++i) w[i] = Complex(g(rng), g(rng));
  return w;
}

// Random unit beams and ratios on associated pairs only.
inline BeamPlan random_plan(const AssociationMatrix& a, int m, Rng& rng) {
  std::uniform_real_distribution<double> rho(0.0, 1.0);
  BeamPlan p(a.uav_count(), a.node_count(), m);
  for (int n = 0; n < a.uav_count(); ++n)
    for (int k = 0; k < a.node_count(); ++k)
      if (a(n, k)) p.set(n, k, random_beam(m, rng), rho(rng));
  return p;
}

}  // namespace fixture
