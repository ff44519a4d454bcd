#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "uavisac/mlp.hpp"
#include "uavisac/rl_env.hpp"
#include "uavisac/types.hpp"

namespace uavisac {

struct SacConfig {
  std::vector<int> hidden{256, 256};
  double gamma = 0.99;
  double tau = 0.005;
  double learning_rate = 1e-4;
  int batch_size = 256;
  int buffer_capacity = 100000;
  double initial_entropy_coef = 1e-3;
  double grad_clip = 10.0;
  /// NaN selects -dim(a).
  double target_entropy = std::numeric_limits<double>::quiet_NaN();
  int epochs = 150;
  /// Update iterations after each epoch's episode; negative means one per collected step.
  int updates_per_epoch = -1;
  /// Uniform random actions for the first this many environment steps.
  int random_steps = 0;
  /// Multiplies rewards before they enter the replay buffer; logged rewards stay unscaled.
  double reward_scale = 1.0;
  std::uint64_t seed = 1;

  void validate() const;
};

struct Transition {
  std::vector<double> observation;
  std::vector<double> action;
  double reward = 0.0;
  std::vector<double> next_observation;
  bool done = false;
};

template <typename T>
struct Batch {
  using Matrix = typename Mlp<T>::Matrix;
  using Vector = typename Mlp<T>::Vector;
  Matrix obs;       ///< obs_dim x B
  Matrix action;    ///< act_dim x B
  Vector reward;    ///< B
  Matrix next_obs;  ///< obs_dim x B
  Vector done;      ///< B, 1 for terminal
  int size() const { return static_cast<int>(reward.size()); }
};

/// FIFO ring buffer with float storage.
class ReplayBuffer {
 public:
  ReplayBuffer(int capacity, int obs_dim, int act_dim);
  void push(const Transition& t);
  int size() const { return size_; }
  int capacity() const { return capacity_; }
  /// The i-th oldest stored transition.
  Transition at(int i) const;
  /// Uniform sample with replacement; throws when fewer than `batch` items are stored.
  template <typename T>
  Batch<T> sample(int batch, Rng& rng) const {
    if (batch > size_) throw Error("ReplayBuffer: fewer stored transitions than the batch size");
    std::uniform_int_distribution<int> pick(0, size_ - 1);
    Batch<T> b{typename Batch<T>::Matrix(obs_.rows(), batch), typename Batch<T>::Matrix(act_.rows(), batch),
               typename Batch<T>::Vector(batch), typename Batch<T>::Matrix(obs_.rows(), batch),
               typename Batch<T>::Vector(batch)};
    for (int j = 0; j < batch; ++j) {
      const int i = pick(rng);
      b.obs.col(j) = obs_.col(i).cast<T>();
      b.action.col(j) = act_.col(i).cast<T>();
      b.reward(j) = static_cast<T>(reward_(i));
      b.next_obs.col(j) = next_obs_.col(i).cast<T>();
      b.done(j) = static_cast<T>(done_(i));
    }
    return b;
  }

 private:
  int capacity_;
  int size_ = 0;
  int head_ = 0;  // next write position
  Eigen::MatrixXf obs_;
  Eigen::MatrixXf act_;
  Eigen::VectorXf reward_;
  Eigen::MatrixXf next_obs_;
  Eigen::VectorXf done_;
};

/// log-std bounds of the policy head.
inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;

/// log density of a = tanh(u) for u ~ N(mean, exp(log_std)^2), one dimension.
double squashed_gaussian_log_prob(double u, double mean, double log_std);

/// log(1 - tanh(u)^2) computed without cancellation.
template <typename T>
T log_one_minus_tanh_sq(T u) {
  const T x = T(-2) * u;
  const T softplus = x > T(0) ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
  return T(2) * (T(std::log(2.0)) - u - softplus);
}

/// Soft actor-critic with twin critics, Polyak targets and a learned entropy
/// coefficient. The policy network emits 2A rows: means, then unbounded log-std
/// values that are squashed into [kLogStdMin, kLogStdMax].
template <typename T>
class Sac {
 public:
  using Net = Mlp<T>;
  using Matrix = typename Net::Matrix;
  using Vector = typename Net::Vector;
  using Grad = typename Net::Grad;

  struct PolicySample {
    Matrix mean;
    Matrix log_std;
    Matrix raw_log_std;
    Matrix u;
    Matrix action;
    Matrix eps;
    Vector log_prob;
    typename Net::Cache cache;
  };

  Sac() = default;
  Sac(int obs_dim, int act_dim, const SacConfig& cfg, Rng& rng) : cfg_(cfg), obs_dim_(obs_dim), act_dim_(act_dim) {
    cfg.validate();
    auto widths = [&](int in, int out) {
      std::vector<int> w{in};
      w.insert(w.end(), cfg.hidden.begin(), cfg.hidden.end());
      w.push_back(out);
      return w;
    };
    policy_ = Net(widths(obs_dim, 2 * act_dim), rng);
    q1_ = Net(widths(obs_dim + act_dim, 1), rng);
    q2_ = Net(widths(obs_dim + act_dim, 1), rng);
    q1_target_ = q1_;
    q2_target_ = q2_;
    log_alpha_ = std::log(cfg.initial_entropy_coef);
    target_entropy_ = std::isnan(cfg.target_entropy) ? -static_cast<double>(act_dim) : cfg.target_entropy;
    reset_optimizers();
  }

  void reset_optimizers() {
    policy_opt_ = Adam<T>(policy_, cfg_.learning_rate, cfg_.grad_clip);
    q1_opt_ = Adam<T>(q1_, cfg_.learning_rate, cfg_.grad_clip);
    q2_opt_ = Adam<T>(q2_, cfg_.learning_rate, cfg_.grad_clip);
    alpha_opt_ = ScalarAdam(cfg_.learning_rate);
  }

  int observation_dim() const { return obs_dim_; }
  int action_dim() const { return act_dim_; }
  const SacConfig& config() const { return cfg_; }
  double entropy_coef() const { return std::exp(log_alpha_); }
  double log_entropy_coef() const { return log_alpha_; }
  void set_log_entropy_coef(double v) { log_alpha_ = v; }
  double target_entropy() const { return target_entropy_; }

  Net& policy() { return policy_; }
  Net& q1() { return q1_; }
  Net& q2() { return q2_; }
  Net& q1_target() { return q1_target_; }
  Net& q2_target() { return q2_target_; }
  const Net& policy() const { return policy_; }
  const Net& q1() const { return q1_; }
  const Net& q2() const { return q2_; }
  const Net& q1_target() const { return q1_target_; }
  const Net& q2_target() const { return q2_target_; }

  Matrix standard_normal(int rows, int cols, Rng& rng) const {
    std::normal_distribution<double> n01(0.0, 1.0);
    Matrix m(rows, cols);
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = static_cast<T>(n01(rng));
    return m;
  }

  /// Reparameterized draw a = tanh(mean + std * eps) with its log density.
  PolicySample sample(const Matrix& obs, const Matrix& eps) const {
    PolicySample s;
    const Matrix out = policy_.forward(obs, &s.cache);
    if (!out.allFinite()) throw Error("policy: non-finite network output");
    const int a = act_dim_;
    s.mean = out.topRows(a);
    s.raw_log_std = out.bottomRows(a);
    const T lo = T(kLogStdMin), hi = T(kLogStdMax);
    s.log_std = s.raw_log_std.unaryExpr([&](T x) { return lo + T(0.5) * (hi - lo) * (std::tanh(x) + T(1)); });
    s.eps = eps;
    s.u = s.mean.array() + s.log_std.array().exp() * eps.array();
    s.action = s.u.array().tanh();
    const T half_log_2pi = T(0.5 * std::log(2.0 * kPi));
    s.log_prob = Vector::Zero(obs.cols());
    for (Eigen::Index c = 0; c < s.u.cols(); ++c)
      for (Eigen::Index r = 0; r < a; ++r)
        s.log_prob(c) += -T(0.5) * eps(r, c) * eps(r, c) - s.log_std(r, c) - half_log_2pi -
                         log_one_minus_tanh_sq(s.u(r, c));
    return s;
  }

  /// Action for one observation; deterministic returns tanh(mean).
  std::vector<double> act(const std::vector<double>& observation, Rng& rng, bool deterministic) const {
    Matrix obs(obs_dim_, 1);
    for (int i = 0; i < obs_dim_; ++i) obs(i, 0) = static_cast<T>(observation[static_cast<std::size_t>(i)]);
    Matrix eps = deterministic ? Matrix::Zero(act_dim_, 1) : standard_normal(act_dim_, 1, rng);
    const PolicySample s = sample(obs, eps);
    std::vector<double> out(static_cast<std::size_t>(act_dim_));
    for (int i = 0; i < act_dim_; ++i) out[static_cast<std::size_t>(i)] = static_cast<double>(s.action(i, 0));
    return out;
  }

  static Matrix critic_input(const Matrix& obs, const Matrix& action) {
    Matrix x(obs.rows() + action.rows(), obs.cols());
    x << obs, action;
    return x;
  }

  /// y = r + gamma (1 - done) (min_i Q'_i(s', a') - alpha log pi(a'|s')), a' drawn with `eps`.
  Vector target_values(const Batch<T>& b, const Matrix& eps) const {
    const PolicySample next = sample(b.next_obs, eps);
    const Matrix x = critic_input(b.next_obs, next.action);
    const Vector q1 = q1_target_.forward(x).row(0).transpose();
    const Vector q2 = q2_target_.forward(x).row(0).transpose();
    const T alpha = static_cast<T>(entropy_coef());
    const Vector soft = q1.cwiseMin(q2) - alpha * next.log_prob;
    return b.reward.array() + T(cfg_.gamma) * (T(1) - b.done.array()) * soft.array();
  }

  /// mean 1/2 (Q_i(s, a) - y)^2 for critic `which` (1 or 2); gradient accumulated into `grad`.
  T critic_loss(int which, const Batch<T>& b, const Vector& y, Grad* grad) const {
    const Net& q = which == 1 ? q1_ : q2_;
    typename Net::Cache cache;
    const Matrix out = q.forward(critic_input(b.obs, b.action), &cache);
    const Vector diff = out.row(0).transpose() - y;
    const T n = static_cast<T>(b.size());
    if (grad) q.backward(cache, (diff / n).transpose(), grad);
    return T(0.5) * diff.squaredNorm() / n;
  }

  /// mean (alpha log pi(a|s) - min_i Q_i(s, a)) with a drawn from `eps`; critics held fixed.
  T policy_loss(const Batch<T>& b, const Matrix& eps, Grad* grad, Vector* log_prob = nullptr) const {
    const PolicySample s = sample(b.obs, eps);
    if (log_prob) *log_prob = s.log_prob;
    const Matrix x = critic_input(b.obs, s.action);
    typename Net::Cache c1, c2;
    const Matrix q1 = q1_.forward(x, &c1);
    const Matrix q2 = q2_.forward(x, &c2);
    const Eigen::Index batch = b.obs.cols();
    const T n = static_cast<T>(batch);
    const T alpha = static_cast<T>(entropy_coef());

    // dmin(Q)/da per sample, routed through whichever critic is smaller.
    Matrix pick1 = Matrix::Zero(1, batch), pick2 = Matrix::Zero(1, batch);
    T loss = 0;
    for (Eigen::Index j = 0; j < batch; ++j) {
      const bool first = q1(0, j) <= q2(0, j);
      (first ? pick1 : pick2)(0, j) = T(1);
      loss += alpha * s.log_prob(j) - (first ? q1(0, j) : q2(0, j));
    }
    loss /= n;
    if (!grad) return loss;

    const Matrix dx1 = q1_.backward(c1, pick1, nullptr);
    const Matrix dx2 = q2_.backward(c2, pick2, nullptr);
    const Matrix dq_da = (dx1 + dx2).bottomRows(act_dim_);

    const Matrix one_minus_a2 = (T(1) - s.action.array().square()).matrix();
    const Matrix sigma_eps = (s.log_std.array().exp() * s.eps.array()).matrix();
    const Matrix d_mean =
        (alpha * T(2) * s.action.array() - dq_da.array() * one_minus_a2.array()) / n;
    const Matrix d_log_std = (alpha * (T(-1) + T(2) * s.action.array() * sigma_eps.array()) -
                              dq_da.array() * one_minus_a2.array() * sigma_eps.array()) /
                             n;
    const T half_span = T(0.5 * (kLogStdMax - kLogStdMin));
    const Matrix d_raw =
        (d_log_std.array() * half_span * (T(1) - s.raw_log_std.array().tanh().square())).matrix();
    Matrix d_out(2 * act_dim_, batch);
    d_out << d_mean, d_raw;
    policy_.backward(s.cache, d_out, grad);
    return loss;
  }

  /// mean(-alpha (log pi + H_target)); `d_log_alpha` receives the derivative w.r.t. log alpha.
  double entropy_loss(const Vector& log_prob, double* d_log_alpha) const {
    const double alpha = entropy_coef();
    const double mean = static_cast<double>(log_prob.mean()) + target_entropy_;
    if (d_log_alpha) *d_log_alpha = -alpha * mean;
    return -alpha * mean;
  }

  struct UpdateStats {
    double critic_loss = 0.0;
    double policy_loss = 0.0;
    double entropy_coef = 0.0;
  };

  /// One iteration: both critics, the policy, the entropy coefficient, then the targets.
  UpdateStats update(const Batch<T>& b, Rng& rng) {
    UpdateStats st;
    const Vector y = target_values(b, standard_normal(act_dim_, b.size(), rng));
    Grad g1 = q1_.make_grad(), g2 = q2_.make_grad();
    st.critic_loss = 0.5 * static_cast<double>(critic_loss(1, b, y, &g1) + critic_loss(2, b, y, &g2));
    q1_opt_.step(q1_, g1);
    q2_opt_.step(q2_, g2);

    Grad gp = policy_.make_grad();
    Vector log_prob;
    st.policy_loss = static_cast<double>(policy_loss(b, standard_normal(act_dim_, b.size(), rng), &gp, &log_prob));
    policy_opt_.step(policy_, gp);

    double d_log_alpha = 0.0;
    entropy_loss(log_prob, &d_log_alpha);
    log_alpha_ = alpha_opt_.step(log_alpha_, d_log_alpha);

    soft_update(q1_, q1_target_, cfg_.tau);
    soft_update(q2_, q2_target_, cfg_.tau);
    st.entropy_coef = entropy_coef();
    return st;
  }

  /// target = tau * source + (1 - tau) * target; tau must lie in (0, 1].
  static void soft_update(const Net& source, Net& target, double tau) {
    if (!(tau > 0.0 && tau <= 1.0)) throw Error("soft_update: tau must lie in (0, 1]");
    target.soft_update_from(source, static_cast<T>(tau));
  }

 private:
  SacConfig cfg_;
  int obs_dim_ = 0;
  int act_dim_ = 0;
  Net policy_, q1_, q2_, q1_target_, q2_target_;
  Adam<T> policy_opt_, q1_opt_, q2_opt_;
  ScalarAdam alpha_opt_;
  double log_alpha_ = 0.0;
  double target_entropy_ = 0.0;
};

using SacAgent = Sac<float>;

struct EpochStats {
  int epoch = 0;
  double cumulative_reward = 0.0;
  double critic_loss = 0.0;  ///< mean over the epoch's updates
  double policy_loss = 0.0;
  double entropy_coef = 0.0;
  int steps = 0;
  int updates = 0;
};

struct TrainResult {
  SacAgent agent;
  std::vector<EpochStats> curve;
};

/// Reset seed of training episode `epoch`.
std::uint64_t episode_seed(std::uint64_t seed, int epoch);

/// Per epoch: one episode collected with the stochastic policy, then the update
/// iterations. `on_epoch` sees every epoch's stats as they are produced.
TrainResult sac_train(Environment& env, const SacConfig& cfg,
                      const std::function<void(const EpochStats&)>& on_epoch = {});

/// Mean per-step reward of the deterministic policy over one episode per seed.
double evaluate_policy(const SacAgent& agent, Environment& env, const std::vector<std::uint64_t>& seeds);

}  // namespace uavisac
