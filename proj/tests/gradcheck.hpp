// Central finite differences against the analytic SAC gradients, in double.
#pragma once

#include <algorithm>
#include <cmath>

#include "uavisac/sac.hpp"

namespace gradcheck {

using namespace uavisac;
using SacD = Sac<double>;

struct Problem {
  SacD sac;
  Batch<double> batch;
  SacD::Matrix eps;
};

inline Problem make_problem(std::uint64_t seed, int obs_dim = 3, int act_dim = 2, int batch = 5) {
  SacConfig cfg;
  cfg.hidden = {6, 5};
  cfg.batch_size = batch;
  cfg.buffer_capacity = batch;
  cfg.gamma = 0.9;
  Rng rng(seed);
  Problem p{SacD(obs_dim, act_dim, cfg, rng), {}, {}};
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto fill = [&](int rows) {
    SacD::Matrix m(rows, batch);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
    return m;
  };
  p.batch.obs = fill(obs_dim);
  p.batch.action = fill(act_dim) * 0.9;
  p.batch.next_obs = fill(obs_dim);
  p.batch.reward = fill(1).row(0).transpose();
  p.batch.done = SacD::Vector::Zero(batch);
  p.batch.done(batch - 1) = 1.0;
  p.eps = p.sac.standard_normal(act_dim, batch, rng);
  // Distinct target critics so the min is exercised.
  p.sac.q2_target() = Mlp<double>(p.sac.q2().widths(), rng);
  p.sac.set_log_entropy_coef(std::log(0.2));
  return p;
}

inline double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / scale;
}

template <typename Loss>
double flat_check(Mlp<double>& net, const Mlp<double>::Grad& grad, Loss loss, int probes, Rng& rng) {
  std::vector<double> g;
  for (std::size_t i = 0; i < grad.dw.size(); ++i) {
    g.insert(g.end(), grad.dw[i].data(), grad.dw[i].data() + grad.dw[i].size());
    g.insert(g.end(), grad.db[i].data(), grad.db[i].data() + grad.db[i].size());
  }
  std::vector<double> theta = net.flat();
  std::uniform_int_distribution<std::size_t> pick(0, theta.size() - 1);
  double worst = 0.0;
  const double h = 1e-6;
  for (int p = 0; p < probes; ++p) {
    const std::size_t i = pick(rng);
    auto shifted = theta;
    shifted[i] = theta[i] + h;
    net.set_flat(shifted);
    const double up = loss();
    shifted[i] = theta[i] - h;
    net.set_flat(shifted);
    const double down = loss();
    worst = std::max(worst, relative_error(g[i], (up - down) / (2 * h)));
  }
  net.set_flat(theta);
  return worst;
}

// Worst relative error over `probes` random parameters of critic 1.
inline double critic(std::uint64_t seed, int probes) {
  Problem p = make_problem(seed);
  const auto y = p.sac.target_values(p.batch, p.eps);
  auto grad = p.sac.q1().make_grad();
  p.sac.critic_loss(1, p.batch, y, &grad);
  Rng rng(seed + 100);
  return flat_check(p.sac.q1(), grad, [&] { return p.sac.critic_loss(1, p.batch, y, nullptr); }, probes, rng);
}

inline double policy(std::uint64_t seed, int probes) {
  Problem p = make_problem(seed);
  auto grad = p.sac.policy().make_grad();
  p.sac.policy_loss(p.batch, p.eps, &grad);
  Rng rng(seed + 200);
  return flat_check(p.sac.policy(), grad, [&] { return p.sac.policy_loss(p.batch, p.eps, nullptr); }, probes, rng);
}

// Derivative of the entropy-coefficient loss with respect to log alpha, at
// `probes` different log alpha values.
inline double entropy(std::uint64_t seed, int probes) {
  Problem p = make_problem(seed);
  SacD::Vector log_prob;
  p.sac.policy_loss(p.batch, p.eps, nullptr, &log_prob);
  double worst = 0.0;
  const double h = 1e-6;
  for (int i = 0; i < probes; ++i) {
    const double la = -3.0 + 0.5 * i;
    p.sac.set_log_entropy_coef(la);
    double analytic = 0.0;
    p.sac.entropy_loss(log_prob, &analytic);
    p.sac.set_log_entropy_coef(la + h);
    const double up = p.sac.entropy_loss(log_prob, nullptr);
    p.sac.set_log_entropy_coef(la - h);
    const double down = p.sac.entropy_loss(log_prob, nullptr);
    worst = std::max(worst, relative_error(analytic, (up - down) / (2 * h)));
  }
  return worst;
}

}  // namespace gradcheck
