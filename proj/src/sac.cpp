#include "uavisac/sac.hpp"

namespace uavisac {

void SacConfig::validate() const {
  if (hidden.empty()) throw Error("sac: at least one hidden layer required");
  for (int h : hidden)
    if (h <= 0) throw Error("sac: hidden widths must be positive");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error("sac: gamma must lie in [0, 1]");
  if (!(tau > 0.0 && tau < 1.0)) throw Error("sac: tau must lie in (0, 1)");
  if (!(learning_rate > 0.0)) throw Error("sac: learning rate must be positive");
  if (batch_size <= 0) throw Error("sac: batch size must be positive");
  if (buffer_capacity < batch_size) throw Error("sac: buffer capacity below batch size");
  if (!(initial_entropy_coef > 0.0)) throw Error("sac: entropy coefficient must be positive");
  if (epochs < 0) throw Error("sac: epochs must be non-negative");
  if (!(reward_scale > 0.0)) throw Error("sac: reward scale must be positive");
}

ReplayBuffer::ReplayBuffer(int capacity, int obs_dim, int act_dim)
    : capacity_(capacity),
      obs_(obs_dim, capacity),
      act_(act_dim, capacity),
      reward_(capacity),
      next_obs_(obs_dim, capacity),
      done_(capacity) {
  if (capacity <= 0) throw Error("ReplayBuffer: capacity must be positive");
}

void ReplayBuffer::push(const Transition& t) {
  if (static_cast<Eigen::Index>(t.observation.size()) != obs_.rows() ||
      static_cast<Eigen::Index>(t.next_observation.size()) != obs_.rows() ||
      static_cast<Eigen::Index>(t.action.size()) != act_.rows())
    throw Error("ReplayBuffer: transition size mismatch");
  for (Eigen::Index i = 0; i < obs_.rows(); ++i) {
    obs_(i, head_) = static_cast<float>(t.observation[static_cast<std::size_t>(i)]);
    next_obs_(i, head_) = static_cast<float>(t.next_observation[static_cast<std::size_t>(i)]);
  }
  for (Eigen::Index i = 0; i < act_.rows(); ++i) act_(i, head_) = static_cast<float>(t.action[static_cast<std::size_t>(i)]);
  reward_(head_) = static_cast<float>(t.reward);
  done_(head_) = t.done ? 1.0f : 0.0f;
  head_ = (head_ + 1) % capacity_;
  if (size_ < capacity_) ++size_;
}

Transition ReplayBuffer::at(int i) const {
  if (i < 0 || i >= size_) throw Error("ReplayBuffer: index out of range");
  const int slot = (head_ - size_ + i + capacity_) % capacity_;
  Transition t;
  t.observation.assign(obs_.col(slot).data(), obs_.col(slot).data() + obs_.rows());
  t.action.assign(act_.col(slot).data(), act_.col(slot).data() + act_.rows());
  t.reward = reward_(slot);
  t.next_observation.assign(next_obs_.col(slot).data(), next_obs_.col(slot).data() + next_obs_.rows());
  t.done = done_(slot) != 0.0f;
  return t;
}

double squashed_gaussian_log_prob(double u, double mean, double log_std) {
  const double eps = (u - mean) / std::exp(log_std);
  return -0.5 * eps * eps - log_std - 0.5 * std::log(2.0 * kPi) - log_one_minus_tanh_sq(u);
}

std::uint64_t episode_seed(std::uint64_t seed, int epoch) {
  return seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(epoch) + 1;
}

TrainResult sac_train(Environment& env, const SacConfig& cfg, const std::function<void(const EpochStats&)>& on_epoch) {
  cfg.validate();
  Rng rng(cfg.seed);
  TrainResult result{SacAgent(env.observation_dim(), env.action_dim(), cfg, rng), {}};
  SacAgent& agent = result.agent;
  ReplayBuffer buffer(cfg.buffer_capacity, env.observation_dim(), env.action_dim());
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  long total_steps = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    EpochStats st;
    st.epoch = epoch;
    std::vector<double> obs = env.reset(episode_seed(cfg.seed, epoch));
    for (bool done = false; !done;) {
      std::vector<double> action;
      if (total_steps < cfg.random_steps) {
        action.resize(static_cast<std::size_t>(env.action_dim()));
        for (auto& a : action) a = uniform(rng);
      } else {
        action = agent.act(obs, rng, false);
      }
      StepResult step = env.step(action);
      st.cumulative_reward += step.reward;
      buffer.push({std::move(obs), action, step.reward * cfg.reward_scale, step.observation, step.done});
      obs = std::move(step.observation);
      done = step.done;
      ++st.steps;
      ++total_steps;
    }

    const int updates = cfg.updates_per_epoch < 0 ? st.steps : cfg.updates_per_epoch;
    for (int i = 0; i < updates && buffer.size() >= cfg.batch_size; ++i) {
      const auto u = agent.update(buffer.sample<float>(cfg.batch_size, rng), rng);
      st.critic_loss += u.critic_loss;
      st.policy_loss += u.policy_loss;
      ++st.updates;
    }
    if (st.updates > 0) {
      st.critic_loss /= st.updates;
      st.policy_loss /= st.updates;
    }
    st.entropy_coef = agent.entropy_coef();
    result.curve.push_back(st);
    if (on_epoch) on_epoch(st);
  }
  return result;
}

double evaluate_policy(const SacAgent& agent, Environment& env, const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw Error("evaluate_policy: no seeds");
  Rng unused(0);
  double total = 0.0;
  long steps = 0;
  for (auto seed : seeds) {
    std::vector<double> obs = env.reset(seed);
    for (bool done = false; !done; ++steps) {
      StepResult s = env.step(agent.act(obs, unused, true));
      total += s.reward;
      obs = std::move(s.observation);
      done = s.done;
    }
  }
  return total / static_cast<double>(steps);
}

}  // namespace uavisac
