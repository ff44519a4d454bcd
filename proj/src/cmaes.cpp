#include "uavisac/cmaes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace uavisac {

int default_population(int dim) { return 4 + static_cast<int>(std::floor(3.0 * std::log(static_cast<double>(dim)))); }

CmaesResult cmaes_optimize(const std::function<double(const RVec&)>& objective, const RVec& x0,
                           const CmaesConfig& cfg) {
  const int n = static_cast<int>(x0.size());
  if (n == 0) throw Error("cmaes: empty start vector");
  if (!(cfg.sigma0 > 0.0)) throw Error("cmaes: sigma0 must be positive");
  const int lambda = cfg.population > 0 ? cfg.population : default_population(n);
  if (lambda < 2) throw Error("cmaes: population must be at least 2");
  const int mu = lambda / 2;
  const double dn = static_cast<double>(n);

  RVec weights(mu);
  for (int i = 0; i < mu; ++i) weights[i] = std::log((lambda + 1.0) / 2.0) - std::log(i + 1.0);
  weights /= weights.sum();
  const double mu_eff = 1.0 / weights.squaredNorm();

  const double cc = (4.0 + mu_eff / dn) / (dn + 4.0 + 2.0 * mu_eff / dn);
  const double cs = (mu_eff + 2.0) / (dn + mu_eff + 5.0);
  const double c1 = 2.0 / ((dn + 1.3) * (dn + 1.3) + mu_eff);
  const double cmu = std::min(1.0 - c1, 2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((dn + 2.0) * (dn + 2.0) + mu_eff));
  const double damps = 1.0 + 2.0 * std::max(0.0, std::sqrt((mu_eff - 1.0) / (dn + 1.0)) - 1.0) + cs;
  const double chi_n = std::sqrt(dn) * (1.0 - 1.0 / (4.0 * dn) + 1.0 / (21.0 * dn * dn));

  Rng rng(cfg.seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  const bool bounded = cfg.lower < cfg.upper;

  RVec mean = x0;
  double sigma = cfg.sigma0;
  Eigen::MatrixXd c = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd b = Eigen::MatrixXd::Identity(n, n);
  RVec d = RVec::Ones(n);
  RVec pc = RVec::Zero(n), ps = RVec::Zero(n);
  long eigen_eval = 0;

  CmaesResult res;
  res.best_x = x0;
  res.best_f = std::numeric_limits<double>::infinity();

  Eigen::MatrixXd z(n, lambda), y(n, lambda);
  std::vector<double> f(static_cast<std::size_t>(lambda));
  std::vector<int> order(static_cast<std::size_t>(lambda));
  for (int gen = 0; gen < cfg.max_generations; ++gen) {
    for (int k = 0; k < lambda; ++k) {
      for (int i = 0; i < n; ++i) z(i, k) = n01(rng);
      y.col(k) = b * d.asDiagonal() * z.col(k);
      RVec x = mean + sigma * y.col(k);
      if (bounded) x = x.cwiseMax(cfg.lower).cwiseMin(cfg.upper);
      const double fx = objective(x);
      if (!std::isfinite(fx)) throw Error("cmaes: non-finite objective value");
      f[static_cast<std::size_t>(k)] = fx;
      ++res.evaluations;
      if (fx < res.best_f) {
        res.best_f = fx;
        res.best_x = x;
      }
    }
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b2) { return f[static_cast<std::size_t>(a)] < f[static_cast<std::size_t>(b2)]; });

    RVec y_w = RVec::Zero(n), z_w = RVec::Zero(n);
    for (int i = 0; i < mu; ++i) {
      y_w += weights[i] * y.col(order[static_cast<std::size_t>(i)]);
      z_w += weights[i] * z.col(order[static_cast<std::size_t>(i)]);
    }
    mean += sigma * y_w;

    ps = (1.0 - cs) * ps + std::sqrt(cs * (2.0 - cs) * mu_eff) * (b * z_w);
    const double ps_norm = ps.norm();
    const bool hsig = ps_norm / std::sqrt(1.0 - std::pow(1.0 - cs, 2.0 * (gen + 1))) / chi_n < 1.4 + 2.0 / (dn + 1.0);
    pc = (1.0 - cc) * pc + (hsig ? std::sqrt(cc * (2.0 - cc) * mu_eff) : 0.0) * y_w;

    Eigen::MatrixXd rank_mu = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < mu; ++i) {
      const auto& yi = y.col(order[static_cast<std::size_t>(i)]);
      rank_mu.noalias() += weights[i] * yi * yi.transpose();
    }
    const double delta_h = hsig ? 0.0 : cc * (2.0 - cc);
    c = (1.0 - c1 - cmu) * c + c1 * (pc * pc.transpose() + delta_h * c) + cmu * rank_mu;
    sigma *= std::exp((cs / damps) * (ps_norm / chi_n - 1.0));

    // Refresh B and D lazily, as in the reference implementation.
    if (res.evaluations - eigen_eval > lambda / (c1 + cmu) / dn / 10.0) {
      eigen_eval = res.evaluations;
      c = 0.5 * (c + c.transpose());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
      b = es.eigenvectors();
      d = es.eigenvalues().cwiseMax(1e-300).cwiseSqrt();
    }

    res.history.push_back(res.best_f);
    res.generations = gen + 1;
    if (res.best_f < cfg.target) break;
  }
  return res;
}

}  // namespace uavisac
