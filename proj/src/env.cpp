#include "uavisac/env.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace uavisac {

ObservationLayout::ObservationLayout(const ScenarioConfig& cfg)
    : uav_count(cfg.uav_count),
      slots(cfg.max_uav_load),
      antennas(cfg.antenna_count),
      comm_users(cfg.comm_user_count),
      targets(cfg.target_count) {}

int ObservationLayout::size() const {
  return uav_count * slots * 2 * antennas + uav_count * slots + targets * 2 * antennas + targets + uav_count * 3 +
         (comm_users + targets) * 2 + uav_count * antennas + uav_count * 2;
}

ActionLayout::ActionLayout(const ScenarioConfig& cfg)
    : uav_count(cfg.uav_count), slots(cfg.max_uav_load), antennas(cfg.antenna_count), targets(cfg.target_count) {}

namespace {

double clip_unit(double x) { return std::isfinite(x) ? std::clamp(x, -1.0, 1.0) : 0.0; }

double to_ratio(double raw, double quantum) {
  double rho = (clip_unit(raw) + 1.0) / 2.0;
  if (quantum > 0.0) rho = std::clamp(std::round(rho / quantum) * quantum, 0.0, 1.0);
  return rho;
}

CVec read_beam(std::span<const double> raw, int offset, int antennas) {
  CVec w(antennas);
  for (int m = 0; m < antennas; ++m)
    w[m] = Complex(clip_unit(raw[static_cast<std::size_t>(offset + m)]),
                   clip_unit(raw[static_cast<std::size_t>(offset + antennas + m)]));
  return w;
}

// Maps [lo, hi] onto [-1, 1].
double affine(double x, double lo, double hi) { return hi > lo ? 2.0 * (x - lo) / (hi - lo) - 1.0 : 0.0; }

HdbscanParams hdbscan_params(const ScenarioConfig& cfg) {
  return {cfg.hdbscan_min_cluster_size, cfg.hdbscan_min_samples, cfg.hdbscan_epsilon};
}

}  // namespace

DecodedAction decode_action(std::span<const double> raw, const AssociationMatrix& assoc, const WorldState& world,
                            const ScenarioConfig& cfg, ArrayMode array_mode) {
  const ActionLayout layout(cfg);
  if (static_cast<int>(raw.size()) != layout.size()) throw Error("decode_action: action has the wrong length");
  const int n_uav = cfg.uav_count;
  const int m_ant = cfg.antenna_count;
  const int comm = world.comm_count();

  DecodedAction out;
  out.beams = BeamPlan(n_uav, static_cast<int>(world.nodes.size()), m_ant);
  for (int n = 0; n < n_uav; ++n) {
    const int o = layout.uav_offset(n);
    const double commanded = (clip_unit(raw[static_cast<std::size_t>(o)]) + 1.0) / 2.0 * cfg.uav_max_speed;
    Vec3 dir(clip_unit(raw[static_cast<std::size_t>(o + 1)]), clip_unit(raw[static_cast<std::size_t>(o + 2)]),
             clip_unit(raw[static_cast<std::size_t>(o + 3)]));
    const double norm = dir.norm();
    const bool hover = norm < 1e-9;
    out.commanded_speed.push_back(commanded);
    out.speed.push_back(hover ? 0.0 : std::min(commanded, cfg.uav_max_speed));
    out.direction.push_back(hover ? Vec3::UnitX() : Vec3(dir / norm));

    if (array_mode == ArrayMode::kFixed) {
      out.geometry.push_back(uniform_geometry(m_ant, cfg.max_offset, cfg.min_spacing));
    } else {
      std::vector<double> offsets(static_cast<std::size_t>(m_ant));
      for (int m = 0; m < m_ant; ++m)
        offsets[static_cast<std::size_t>(m)] = clip_unit(raw[static_cast<std::size_t>(o + 4 + m)]) * cfg.max_offset;
      out.geometry.push_back(project_geometry(offsets, cfg.max_offset, cfg.min_spacing));
    }

    const auto served = assoc.served_nodes(n, comm);
    const int used = std::min<int>(layout.slots, static_cast<int>(served.size()));
    for (int s = 0; s < used; ++s) {
      const int so = layout.slot_offset(n, s);
      out.beams.set(n, served[static_cast<std::size_t>(s)], read_beam(raw, so, m_ant),
                    to_ratio(raw[static_cast<std::size_t>(so + 2 * m_ant)], cfg.power_quantization));
    }
  }

  for (int t = 0; t < cfg.target_count; ++t) {
    const int node = comm + t;
    const int tx = assoc.serving_uav(node);
    const int to = layout.target_offset(t);
    out.beams.set(tx, node, read_beam(raw, to, m_ant),
                  to_ratio(raw[static_cast<std::size_t>(to + 2 * m_ant)], cfg.power_quantization));
  }

  // Shared budget: scale every link of an overloaded UAV, sensing included.
  if (cfg.per_uav_power_cap) {
    const int nodes = static_cast<int>(world.nodes.size());
    for (int n = 0; n < n_uav; ++n) {
      double power_sum = 0.0;
      for (int k = 0; k < nodes; ++k) power_sum += out.beams.rho(n, k) * out.beams.rho(n, k);
      if (power_sum <= 1.0) continue;
      const double scale = 1.0 / std::sqrt(power_sum);
      for (int k = 0; k < nodes; ++k)
        if (out.beams.rho(n, k) > 0.0)
          out.beams.set(n, k, out.beams.beam(n, k), std::min(1.0, out.beams.rho(n, k) * scale));
    }
  }
  return out;
}

RewardBreakdown compute_reward(const SlotMetrics& metrics, const ScenarioConfig& cfg) {
  RewardBreakdown r;
  for (std::size_t k = 0; k < metrics.comm_sinr.size(); ++k) {
    r.sum_rate_term += std::log2(1.0 + metrics.comm_sinr[k]);
    r.sum_rate_bps += metrics.rates_bps[k];
  }
  for (double gamma : metrics.sensing_sinr) {
    if (gamma >= cfg.sensing_threshold) continue;
    const double ratio = gamma > 0.0 ? cfg.sensing_threshold / gamma : cfg.sensing_penalty_cap;
    r.sensing_penalty += std::min(ratio, cfg.sensing_penalty_cap) * cfg.penalty_sensing;
  }
  r.collision_penalty = static_cast<double>(metrics.collisions.size()) * cfg.penalty_collision;
  r.speed_penalty = static_cast<double>(metrics.speed_violations) * cfg.penalty_speed;
  r.total = r.sum_rate_term - (r.sensing_penalty + r.collision_penalty + r.speed_penalty);
  return r;
}

SlotMetrics evaluate_slot(const WorldState& world, const BeamPlan& beams, const AssociationState& assoc,
                          std::span<const double> clutter_draws, const ScenarioConfig& cfg) {
  const LinkTable links(world, cfg);
  const int comm = world.comm_count();
  SlotMetrics m;
  m.comm_sinr =
      comm_sinrs(links, beams, assoc.alpha, comm, cfg.max_tx_power_w, cfg.comm_noise_w, cfg.interference);
  for (double g : m.comm_sinr) m.rates_bps.push_back(rate(g, cfg.bandwidth_hz));

  const double amplitude = std::sqrt(cfg.max_tx_power_w);
  for (int t = 0; t < cfg.target_count; ++t) {
    const int node = comm + t;
    const int tx = assoc.alpha.serving_uav(node);
    const int rx = select_receiver(node, assoc.alpha, assoc.assignment, world);
    const SensingLink link = make_sensing_link(links, tx, rx, node, cfg.sensing_ref_gain, cfg.rcs(t));
    const ClutterSet clutter =
        clutter_set(link, world, links, clutter_draws, cfg.clutter_coefficient_scale, cfg.ellipse_slack);
    const CVec w = beams.beam(tx, node) * (beams.rho(tx, node) * amplitude);
    m.sensing_sinr.push_back(sensing_sinr(link, w, clutter, cfg.sensing_noise_w));
    m.sensing_rx.push_back(rx);
  }
  m.collisions = check_pairwise_separation(world.uavs, cfg.collision_distance);
  return m;
}

LawnmowerPath::LawnmowerPath(const ScenarioConfig& cfg, int uav) : speed_(cfg.uav_max_speed) {
  const double width = cfg.area_side / cfg.uav_count;
  const double lo = uav * width;
  const double x1 = lo + 0.25 * width;
  const double x2 = lo + 0.75 * width;
  const double z = 0.5 * (cfg.z_min + cfg.z_max);
  waypoints_ = {Vec3(x1, 0.0, z), Vec3(x1, cfg.area_side, z), Vec3(x2, cfg.area_side, z), Vec3(x2, 0.0, z)};
}

std::pair<double, Vec3> LawnmowerPath::command(const Vec3& position) {
  for (std::size_t tries = 0; tries < waypoints_.size(); ++tries) {
    const Vec3 diff = waypoints_[next_] - position;
    const double d = diff.norm();
    if (d > 1e-9) return {std::min(speed_, d), diff / d};
    next_ = (next_ + 1) % waypoints_.size();
  }
  return {0.0, Vec3::UnitX()};
}

IsacEnv::IsacEnv(ScenarioConfig cfg, SchemeOptions scheme)
    : cfg_(std::move(cfg)), scheme_(scheme), obs_layout_(cfg_), act_layout_(cfg_) {
  cfg_.validate();
  obs_layout_ = ObservationLayout(cfg_);
  act_layout_ = ActionLayout(cfg_);
}

std::vector<double> IsacEnv::reset(std::uint64_t seed) {
  auto stream = [seed](std::uint64_t id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(id)};
    return Rng(seq);
  };
  Rng placement_rng = stream(1);
  user_rng_ = stream(2);
  attitude_rng_ = stream(3);
  Rng clutter_rng = stream(4);

  world_ = WorldState{};
  std::uniform_real_distribution<double> area(0.0, cfg_.area_side);
  const int node_count = cfg_.comm_user_count + cfg_.target_count;
  for (int k = 0; k < node_count; ++k) {
    GroundNode node;
    node.id = k;
    node.kind = k < cfg_.comm_user_count ? NodeKind::kCommUser : NodeKind::kSensingTarget;
    const double x = area(user_rng_);
    const double y = area(user_rng_);
    node.position = Vec3(x, y, 0.0);
    resample_velocity(node, cfg_.user_max_speed, user_rng_);
    world_.nodes.push_back(node);
  }

  const double heading = cfg_.array_heading_deg * kPi / 180.0;
  world_.uavs.assign(static_cast<std::size_t>(cfg_.uav_count), UavState{});
  paths_.clear();
  if (scheme_.trajectory == TrajectoryMode::kLawnmower) {
    for (int n = 0; n < cfg_.uav_count; ++n) {
      paths_.emplace_back(cfg_, n);
      world_.uavs[static_cast<std::size_t>(n)].position = paths_.back().start();
    }
  } else {
    const Box box = uav_bounds(cfg_);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      for (auto& uav : world_.uavs)
        for (int i = 0; i < 3; ++i) uav.position[i] = box.lo[i] + unit(placement_rng) * (box.hi[i] - box.lo[i]);
      placed = check_pairwise_separation(world_.uavs, cfg_.collision_distance).empty();
    }
    if (!placed) throw Error("reset: could not place UAVs with the required separation after 1000 tries");
  }
  for (auto& uav : world_.uavs) {
    uav.attitude = sample_attitude(cfg_.attitude_max_deg, attitude_rng_);
    uav.array = uniform_geometry(cfg_.antenna_count, cfg_.max_offset, cfg_.min_spacing);
    uav.array_heading = heading;
  }

  clutter_draws_.resize(static_cast<std::size_t>(node_count));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (auto& d : clutter_draws_) d = unit(clutter_rng);

  assoc_ = AssociationState{};
  world_.slot = 0;
  done_ = false;
  refresh_association();
  return observe();
}

void IsacEnv::refresh_association() {
  if (scheme_.association == AssociationMode::kClustering) {
    assoc_ = maybe_recluster(world_.slot, cfg_.assoc_interval, assoc_, world_, hdbscan_params(cfg_),
                             cfg_.max_uav_load);
    if (assoc_.reclustered) write_clusters();
    return;
  }
  assoc_.alpha = nearest_association(world_, cfg_.max_uav_load);
  assoc_.clusters = ClusterResult{};
  assoc_.assignment.uav_cluster.resize(static_cast<std::size_t>(cfg_.uav_count));
  for (int n = 0; n < cfg_.uav_count; ++n) assoc_.assignment.uav_cluster[static_cast<std::size_t>(n)] = n;
  assoc_.assignment.cluster_sizes = uav_loads(assoc_.alpha, world_.comm_count());
  assoc_.reclustered = false;
}

std::vector<double> IsacEnv::observe() const {
  const LinkTable links(world_, cfg_);
  const int comm = world_.comm_count();
  const int m_ant = cfg_.antenna_count;
  const double h_scale = std::sqrt(cfg_.ref_channel_gain) / cfg_.z_min;
  std::vector<double> obs;
  obs.reserve(static_cast<std::size_t>(obs_layout_.size()));
  auto push_channel = [&](const CVec& h) {
    for (int m = 0; m < m_ant; ++m) obs.push_back(h[m].real() / h_scale);
    for (int m = 0; m < m_ant; ++m) obs.push_back(h[m].imag() / h_scale);
  };

  std::vector<std::vector<int>> served;
  for (int n = 0; n < cfg_.uav_count; ++n) served.push_back(assoc_.alpha.served_nodes(n, comm));
  for (int n = 0; n < cfg_.uav_count; ++n)
    for (int s = 0; s < cfg_.max_uav_load; ++s) {
      const auto& list = served[static_cast<std::size_t>(n)];
      if (s < static_cast<int>(list.size())) push_channel(links.channel(n, list[static_cast<std::size_t>(s)]).h);
      else obs.insert(obs.end(), static_cast<std::size_t>(2 * m_ant), 0.0);
    }
  for (int n = 0; n < cfg_.uav_count; ++n)
    for (int s = 0; s < cfg_.max_uav_load; ++s)
      obs.push_back(s < static_cast<int>(served[static_cast<std::size_t>(n)].size()) ? 1.0 : 0.0);

  std::vector<double> gains;
  for (int t = 0; t < cfg_.target_count; ++t) {
    const int node = comm + t;
    const int tx = assoc_.alpha.serving_uav(node);
    const int rx = select_receiver(node, assoc_.alpha, assoc_.assignment, world_);
    push_channel(links.channel(tx, node).h);
    const double g_max = cfg_.sensing_ref_gain * std::sqrt(cfg_.rcs(t)) / (cfg_.z_min * cfg_.z_min);
    gains.push_back(bistatic_gain(cfg_.sensing_ref_gain, cfg_.rcs(t), links.channel(tx, node).distance,
                                  links.channel(rx, node).distance) /
                    g_max);
  }
  obs.insert(obs.end(), gains.begin(), gains.end());

  const Box box = uav_bounds(cfg_);
  for (const auto& uav : world_.uavs)
    for (int i = 0; i < 3; ++i) obs.push_back(affine(uav.position[i], box.lo[i], box.hi[i]));
  for (const auto& node : world_.nodes)
    for (int i = 0; i < 2; ++i) obs.push_back(affine(node.position[i], 0.0, cfg_.area_side));
  for (const auto& uav : world_.uavs)
    for (double r : uav.array.offsets) obs.push_back(r / cfg_.max_offset);
  for (int n = 0; n < cfg_.uav_count; ++n) {
    const auto& owned = assoc_.assignment.uav_cluster;
    const int c = owned.empty() ? -1 : owned[static_cast<std::size_t>(n)];
    if (scheme_.association == AssociationMode::kClustering && c >= 0) {
      const Vec2& mu = assoc_.clusters.centroids[static_cast<std::size_t>(c)];
      obs.push_back(affine(mu.x(), 0.0, cfg_.area_side));
      obs.push_back(affine(mu.y(), 0.0, cfg_.area_side));
    } else {
      obs.push_back(0.0);
      obs.push_back(0.0);
    }
  }
  return obs;
}

IsacEnv::Executed IsacEnv::execute(std::span<const double> action, std::vector<LawnmowerPath>& paths,
                                   Rng* user_rng, Rng* attitude_rng) const {
  Executed ex{world_, decode_action(action, assoc_.alpha, world_, cfg_, scheme_.array), {}, {}};
  for (int n = 0; n < cfg_.uav_count; ++n) {
    const auto un = static_cast<std::size_t>(n);
    auto& uav = ex.world.uavs[un];
    if (scheme_.trajectory == TrajectoryMode::kLawnmower) {
      const auto [speed, dir] = paths[un].command(uav.position);
      ex.decoded.commanded_speed[un] = speed;
      ex.decoded.speed[un] = speed;
      ex.decoded.direction[un] = dir;
    }
    uav.array = ex.decoded.geometry[un];
    uav = apply_uav_motion(uav, ex.decoded.speed[un], ex.decoded.direction[un], cfg_);
    if (attitude_rng) uav.attitude = sample_attitude(cfg_.attitude_max_deg, *attitude_rng);
  }
  if (user_rng) step_user_mobility(ex.world.nodes, world_.slot + 1, cfg_, *user_rng);

  ex.metrics = evaluate_slot(ex.world, ex.decoded.beams, assoc_, clutter_draws_, cfg_);
  for (double s : ex.decoded.commanded_speed)
    if (s > cfg_.uav_max_speed) ++ex.metrics.speed_violations;
  ex.reward = compute_reward(ex.metrics, cfg_);
  return ex;
}

RewardBreakdown IsacEnv::evaluate_static(std::span<const double> action) const {
  if (done_) throw Error("evaluate_static: episode finished; call reset");
  auto paths = paths_;
  return execute(action, paths, nullptr, nullptr).reward;
}

StepOutcome IsacEnv::step_detailed(std::span<const double> action) {
  if (done_) throw Error("step: episode finished; call reset");
  Executed ex = execute(action, paths_, &user_rng_, &attitude_rng_);
  world_ = ex.world;
  write_trace(ex);
  ++world_.slot;
  done_ = world_.slot >= cfg_.episode_length;
  if (!done_) refresh_association();
  return {observe(), ex.reward, std::move(ex.metrics), done_};
}

StepResult IsacEnv::step(std::span<const double> action) {
  auto out = step_detailed(action);
  return {std::move(out.observation), out.reward.total, out.done};
}

void IsacEnv::write_trace(const Executed& ex) const {
  if (!trace_) return;
  using nlohmann::json;
  json line;
  line["t"] = ex.world.slot;
  line["reclustered"] = assoc_.reclustered;
  json uavs = json::array(), offsets = json::array(), nodes = json::array(), serving = json::array();
  for (const auto& u : ex.world.uavs) {
    uavs.push_back({u.position.x(), u.position.y(), u.position.z()});
    offsets.push_back(u.array.offsets);
  }
  for (const auto& n : ex.world.nodes) nodes.push_back({n.position.x(), n.position.y()});
  for (int k = 0; k < assoc_.alpha.node_count(); ++k) serving.push_back(assoc_.alpha.serving_uav(k));
  line["uav_positions"] = uavs;
  line["offsets"] = offsets;
  line["node_positions"] = nodes;
  line["serving_uav"] = serving;
  line["rates_bps"] = ex.metrics.rates_bps;
  line["sensing_sinr"] = ex.metrics.sensing_sinr;
  line["sensing_rx"] = ex.metrics.sensing_rx;
  json pairs = json::array();
  for (const auto& [a, b] : ex.metrics.collisions) pairs.push_back({a, b});
  line["collisions"] = pairs;
  line["reward"] = {{"sum_rate_bps", ex.reward.sum_rate_bps},
                    {"sum_rate_term", ex.reward.sum_rate_term},
                    {"sensing_penalty", ex.reward.sensing_penalty},
                    {"collision_penalty", ex.reward.collision_penalty},
                    {"speed_penalty", ex.reward.speed_penalty},
                    {"total", ex.reward.total}};
  *trace_ << line.dump() << '\n';
}

void IsacEnv::write_clusters() const {
  if (!cluster_dump_) return;
  nlohmann::json line;
  line["slot"] = world_.slot;
  line["labels"] = assoc_.clusters.labels;
  nlohmann::json centroids = nlohmann::json::array();
  for (const auto& c : assoc_.clusters.centroids) centroids.push_back({c.x(), c.y()});
  line["centroids"] = centroids;
  line["uav_cluster"] = assoc_.assignment.uav_cluster;
  line["cluster_sizes"] = assoc_.assignment.cluster_sizes;
  *cluster_dump_ << line.dump() << '\n';
}

}  // namespace uavisac
