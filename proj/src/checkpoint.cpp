#include "uavisac/checkpoint.hpp"

#include <fstream>

#include "json.hpp"

namespace uavisac {

namespace {

using nlohmann::json;

json net_to_json(const Mlp<float>& net) { return {{"widths", net.widths()}, {"params", net.flat()}}; }

void net_from_json(const json& j, Mlp<float>& net) {
  if (j.at("widths").get<std::vector<int>>() != net.widths()) throw Error("checkpoint: network shape mismatch");
  net.set_flat(j.at("params").get<std::vector<float>>());
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const SacAgent& agent, std::uint64_t config_hash,
                     const std::string& scheme) {
  const SacConfig& cfg = agent.config();
  json j;
  j["version"] = kCheckpointVersion;
  j["config_hash"] = config_hash;
  j["scheme"] = scheme;
  j["observation_dim"] = agent.observation_dim();
  j["action_dim"] = agent.action_dim();
  j["sac"] = {{"hidden", cfg.hidden},         {"gamma", cfg.gamma},
              {"tau", cfg.tau},               {"learning_rate", cfg.learning_rate},
              {"batch_size", cfg.batch_size}, {"buffer_capacity", cfg.buffer_capacity},
              {"grad_clip", cfg.grad_clip},   {"reward_scale", cfg.reward_scale},
              {"seed", cfg.seed}};
  j["log_entropy_coef"] = agent.log_entropy_coef();
  j["networks"] = {{"policy", net_to_json(agent.policy())},
                   {"q1", net_to_json(agent.q1())},
                   {"q2", net_to_json(agent.q2())},
                   {"q1_target", net_to_json(agent.q1_target())},
                   {"q2_target", net_to_json(agent.q2_target())}};
  std::ofstream out(path);
  if (!out) throw Error("checkpoint: cannot write " + path.string());
  out << j.dump() << '\n';
  if (!out) throw Error("checkpoint: write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("checkpoint: cannot read " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error("checkpoint: malformed file " + path.string() + ": " + e.what());
  }
  try {
    if (j.at("version").get<int>() != kCheckpointVersion)
      throw Error("checkpoint: unsupported version " + std::to_string(j.at("version").get<int>()));
    SacConfig cfg;
    const json& s = j.at("sac");
    cfg.hidden = s.at("hidden").get<std::vector<int>>();
    cfg.gamma = s.at("gamma").get<double>();
    cfg.tau = s.at("tau").get<double>();
    cfg.learning_rate = s.at("learning_rate").get<double>();
    cfg.batch_size = s.at("batch_size").get<int>();
    cfg.buffer_capacity = s.at("buffer_capacity").get<int>();
    cfg.grad_clip = s.at("grad_clip").get<double>();
    cfg.reward_scale = s.at("reward_scale").get<double>();
    cfg.seed = s.at("seed").get<std::uint64_t>();
    Rng rng(cfg.seed);
    Checkpoint cp{SacAgent(j.at("observation_dim").get<int>(), j.at("action_dim").get<int>(), cfg, rng),
                  j.at("config_hash").get<std::uint64_t>(), j.at("scheme").get<std::string>()};
    const json& nets = j.at("networks");
    net_from_json(nets.at("policy"), cp.agent.policy());
    net_from_json(nets.at("q1"), cp.agent.q1());
    net_from_json(nets.at("q2"), cp.agent.q2());
    net_from_json(nets.at("q1_target"), cp.agent.q1_target());
    net_from_json(nets.at("q2_target"), cp.agent.q2_target());
    cp.agent.set_log_entropy_coef(j.at("log_entropy_coef").get<double>());
    return cp;
  } catch (const json::exception& e) {
    throw Error("checkpoint: malformed file " + path.string() + ": " + e.what());
  }
}

}  // namespace uavisac
