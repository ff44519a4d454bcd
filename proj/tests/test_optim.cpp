#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "gradcheck.hpp"
#include "json.hpp"
#include "uavisac/checkpoint.hpp"
#include "uavisac/cmaes.hpp"
#include "uavisac/sac.hpp"

using namespace uavisac;

namespace {

SacConfig toy_config(std::uint64_t seed) {
  SacConfig cfg;
  cfg.hidden = {16, 16};
  cfg.batch_size = 32;
  cfg.buffer_capacity = 2000;
  cfg.learning_rate = 3e-3;
  cfg.epochs = 5;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("gradients match finite differences") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    CHECK(gradcheck::critic(seed, 10) < 1e-4);
    CHECK(gradcheck::policy(seed, 10) < 1e-4);
    CHECK(gradcheck::entropy(seed, 10) < 1e-4);
  }
}

TEST_CASE("mlp shapes") {
  Rng rng(1);
  Mlp<double> net({3, 4, 2}, rng);
  CHECK(net.parameter_count() == 4 * 4 + 5 * 2);
  CHECK(net.flat().size() == 26u);
  CHECK(net.forward(Mlp<double>::Matrix::Zero(3, 7)).cols() == 7);
  CHECK_THROWS_AS(net.set_flat(std::vector<double>(5)), Error);
  CHECK_THROWS_AS(Mlp<double>({3}, rng), Error);
}

TEST_CASE("target values") {
  auto p = gradcheck::make_problem(4);
  SacConfig cfg = p.sac.config();

  SUBCASE("gamma zero gives the reward") {
    cfg.gamma = 0.0;
    Rng rng(4);
    gradcheck::SacD s(3, 2, cfg, rng);
    const auto y = s.target_values(p.batch, p.eps);
    for (int j = 0; j < p.batch.size(); ++j) CHECK(y(j) == p.batch.reward(j));
  }
  SUBCASE("identical target critics") {
    p.sac.q2_target() = p.sac.q1_target();
    const auto y = p.sac.target_values(p.batch, p.eps);
    const auto next = p.sac.sample(p.batch.next_obs, p.eps);
    const auto q = p.sac.q1_target().forward(gradcheck::SacD::critic_input(p.batch.next_obs, next.action));
    for (int j = 0; j < p.batch.size(); ++j) {
      const double soft = q(0, j) - p.sac.entropy_coef() * next.log_prob(j);
      CHECK(y(j) == doctest::Approx(p.batch.reward(j) + cfg.gamma * (1 - p.batch.done(j)) * soft).epsilon(1e-12));
    }
  }
  SUBCASE("swapping the target critics changes nothing") {
    const auto y = p.sac.target_values(p.batch, p.eps);
    std::swap(p.sac.q1_target(), p.sac.q2_target());
    CHECK(p.sac.target_values(p.batch, p.eps) == y);
  }
}

TEST_CASE("squashed gaussian density") {
  for (auto [mean, log_std] : {std::pair{0.3, -0.5}, std::pair{-1.0, 0.2}, std::pair{0.0, -2.0}}) {
    const int n = 200000;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      const double a = -1.0 + (i + 0.5) * 2.0 / n;
      total += std::exp(squashed_gaussian_log_prob(std::atanh(a), mean, log_std)) * 2.0 / n;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-3));
  }
  for (double u : {-30.0, -3.0, 0.0, 0.5, 25.0}) {
    const double direct = std::log(1.0 - std::tanh(u) * std::tanh(u));
    if (std::isfinite(direct) && std::abs(u) < 10) CHECK(log_one_minus_tanh_sq(u) == doctest::Approx(direct));
    CHECK(std::isfinite(log_one_minus_tanh_sq(u)));
  }
}

TEST_CASE("deterministic action is tanh of the mean") {
  Rng rng(5);
  SacConfig cfg;
  cfg.hidden = {8};
  Sac<double> sac(4, 3, cfg, rng);
  const std::vector<double> obs{0.1, -0.2, 0.3, 0.9};
  Mlp<double>::Matrix x(4, 1);
  for (int i = 0; i < 4; ++i) x(i, 0) = obs[static_cast<std::size_t>(i)];
  const auto out = sac.policy().forward(x);
  const auto a = sac.act(obs, rng, true);
  for (int i = 0; i < 3; ++i) CHECK(a[static_cast<std::size_t>(i)] == doctest::Approx(std::tanh(out(i, 0))));
  const auto b = sac.act(obs, rng, false);
  for (double v : b) CHECK(std::abs(v) <= 1.0);
}

TEST_CASE("replay buffer is FIFO") {
  ReplayBuffer buf(5, 2, 1);
  for (int i = 0; i < 15; ++i) buf.push({{double(i), 0.0}, {0.5}, double(i), {0.0, double(i)}, i % 2 == 0});
  CHECK(buf.size() == 5);
  for (int i = 0; i < 5; ++i) {
    const Transition t = buf.at(i);
    CHECK(t.reward == 10 + i);
    CHECK(t.observation[0] == 10 + i);
    CHECK(t.done == ((10 + i) % 2 == 0));
  }
  CHECK_THROWS_AS(buf.at(5), Error);
  Rng rng(1);
  CHECK_THROWS_AS(buf.sample<float>(6, rng), Error);
  const auto b = buf.sample<float>(5, rng);
  for (int j = 0; j < 5; ++j) CHECK(b.reward(j) >= 10.0f);
  CHECK_THROWS_AS(buf.push({{1.0}, {0.5}, 0.0, {0.0, 1.0}, false}), Error);
}

TEST_CASE("soft update") {
  Rng rng(6);
  Mlp<double> a({2, 3, 1}, rng), b({2, 3, 1}, rng);
  Mlp<double> t = b;
  Sac<double>::soft_update(a, t, 1.0);
  CHECK(t.flat() == a.flat());
  t = b;
  Sac<double>::soft_update(a, t, 0.25);
  const auto fa = a.flat(), fb = b.flat(), ft = t.flat();
  for (std::size_t i = 0; i < ft.size(); ++i) CHECK(ft[i] == doctest::Approx(0.25 * fa[i] + 0.75 * fb[i]));
  CHECK_THROWS_AS(Sac<double>::soft_update(a, t, 0.0), Error);
}

TEST_CASE("entropy coefficient moves toward the target entropy") {
  auto p = gradcheck::make_problem(7);
  const double target = p.sac.target_entropy();
  CHECK(target == -2.0);
  double d = 0.0;
  // Log densities above -target mean too little entropy: alpha must grow.
  p.sac.entropy_loss(gradcheck::SacD::Vector::Constant(4, -target + 1.0), &d);
  CHECK(d < 0.0);
  p.sac.entropy_loss(gradcheck::SacD::Vector::Constant(4, -target - 1.0), &d);
  CHECK(d > 0.0);
}

TEST_CASE("critic loss falls on a fixed batch") {
  auto p = gradcheck::make_problem(8);
  SacConfig cfg = p.sac.config();
  cfg.gamma = 0.0;
  cfg.learning_rate = 1e-2;
  Rng rng(8);
  gradcheck::SacD sac(3, 2, cfg, rng);
  const auto y = sac.target_values(p.batch, p.eps);
  const double before = sac.critic_loss(1, p.batch, y, nullptr);
  for (int i = 0; i < 200; ++i) sac.update(p.batch, rng);
  CHECK(sac.critic_loss(1, p.batch, y, nullptr) < 0.1 * before);
}

TEST_CASE("a small step along the policy gradient lowers the policy loss") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto p = gradcheck::make_problem(seed);
    auto grad = p.sac.policy().make_grad();
    const double before = p.sac.policy_loss(p.batch, p.eps, &grad);
    auto theta = p.sac.policy().flat();
    std::size_t i = 0;
    for (std::size_t l = 0; l < grad.dw.size(); ++l) {
      for (Eigen::Index j = 0; j < grad.dw[l].size(); ++j) theta[i++] -= 1e-3 * grad.dw[l].data()[j];
      for (Eigen::Index j = 0; j < grad.db[l].size(); ++j) theta[i++] -= 1e-3 * grad.db[l].data()[j];
    }
    p.sac.policy().set_flat(theta);
    CHECK(p.sac.policy_loss(p.batch, p.eps, nullptr) < before);
  }
}

TEST_CASE("training with no updates leaves the policy at its initialization") {
  SacConfig cfg = toy_config(3);
  cfg.updates_per_epoch = 0;
  ToyEnv env;
  const TrainResult r = sac_train(env, cfg);
  Rng rng(cfg.seed);
  const SacAgent fresh(1, 1, cfg, rng);
  CHECK(r.agent.policy().flat() == fresh.policy().flat());
  CHECK(r.curve.size() == 5u);
  for (const auto& e : r.curve) {
    CHECK(e.updates == 0);
    CHECK(e.steps == 20);
  }
}

TEST_CASE("training is deterministic per seed") {
  ToyEnv e1, e2, e3;
  const auto a = sac_train(e1, toy_config(11));
  const auto b = sac_train(e2, toy_config(11));
  const auto c = sac_train(e3, toy_config(12));
  CHECK(a.agent.policy().flat() == b.agent.policy().flat());
  CHECK(a.agent.q1().flat() == b.agent.q1().flat());
  for (std::size_t i = 0; i < a.curve.size(); ++i) CHECK(a.curve[i].cumulative_reward == b.curve[i].cumulative_reward);
  CHECK(a.agent.policy().flat() != c.agent.policy().flat());
}

TEST_CASE("sac config validation") {
  SacConfig cfg;
  cfg.tau = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = SacConfig{};
  cfg.buffer_capacity = 10;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = SacConfig{};
  cfg.hidden = {};
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("cma-es") {
  CHECK(default_population(10) == 10);
  CHECK(default_population(1) == 4);

  SUBCASE("one-dimensional quadratic") {
    CmaesConfig cfg;
    cfg.sigma0 = 1.0;
    const auto r = cmaes_optimize([](const RVec& x) { return (x[0] - 3.0) * (x[0] - 3.0); }, RVec::Zero(1), cfg);
    CHECK(r.best_x[0] == doctest::Approx(3.0).epsilon(1e-4));
    for (std::size_t i = 1; i < r.history.size(); ++i) CHECK(r.history[i] <= r.history[i - 1]);
  }
  SUBCASE("target stops early and bounds clip candidates") {
    CmaesConfig cfg;
    cfg.target = 1e-3;
    cfg.lower = -0.5;
    cfg.upper = 0.5;
    double worst = 0.0;
    const auto r = cmaes_optimize(
        [&](const RVec& x) {
          worst = std::max(worst, x.cwiseAbs().maxCoeff());
          return (x.array() - 0.2).square().sum();
        },
        RVec::Constant(3, 0.4), cfg);
    CHECK(worst <= 0.5);
    CHECK(r.best_f < 1e-3);
    CHECK(r.generations < cfg.max_generations);
  }
  SUBCASE("deterministic per seed") {
    auto f = [](const RVec& x) { return x.squaredNorm() + std::sin(3 * x[0]); };
    const auto a = cmaes_optimize(f, RVec::Ones(4), CmaesConfig{});
    const auto b = cmaes_optimize(f, RVec::Ones(4), CmaesConfig{});
    CHECK(a.best_f == b.best_f);
    CHECK(a.evaluations == b.evaluations);
  }
}

TEST_CASE("checkpoint round trip") {
  ToyEnv env;
  const auto trained = sac_train(env, toy_config(2));
  const auto dir = std::filesystem::temp_directory_path() / "uavisac_ckpt_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "agent.json";
  save_checkpoint(path, trained.agent, 0xABCDEF0123ULL, "proposed");
  const Checkpoint cp = load_checkpoint(path);
  CHECK(cp.config_hash == 0xABCDEF0123ULL);
  CHECK(cp.scheme == "proposed");
  CHECK(cp.agent.policy().flat() == trained.agent.policy().flat());
  CHECK(cp.agent.q2_target().flat() == trained.agent.q2_target().flat());
  CHECK(cp.agent.log_entropy_coef() == trained.agent.log_entropy_coef());
  Rng rng(0);
  const std::vector<double> obs{0.3};
  CHECK(cp.agent.act(obs, rng, true) == trained.agent.act(obs, rng, true));

  std::ifstream in(path);
  auto j = nlohmann::json::parse(in);
  in.close();
  j["version"] = kCheckpointVersion + 1;
  std::ofstream(dir / "bad.json") << j.dump();
  CHECK_THROWS_AS(load_checkpoint(dir / "bad.json"), Error);
  std::ofstream(dir / "junk.json") << "{not json";
  CHECK_THROWS_AS(load_checkpoint(dir / "junk.json"), Error);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.json"), Error);
  std::filesystem::remove_all(dir);
}
