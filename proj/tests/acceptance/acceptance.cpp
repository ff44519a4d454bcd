// Acceptance checks: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria. The trend criteria read the CSVs written by
// tools/run_trends.sh; pass --results DIR to point elsewhere.
#include <malloc.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"
#include "uavisac/cmaes.hpp"
#include "uavisac/harness.hpp"
#include "uavisac/hdbscan.hpp"
#include "uavisac/sensing.hpp"

#ifndef UAVISAC_RESULTS_DIR
#define UAVISAC_RESULTS_DIR "results"
#endif

namespace fs = std::filesystem;
using namespace uavisac;

namespace {

// Tolerances and budgets.
constexpr double kOracleRelTol = 1e-10;
constexpr double kOracleSeconds = 10.0;
constexpr double kLevelTol = 1e-9;
constexpr double kLevelSeconds = 5.0;
constexpr double kUnitModulusTol = 1e-12;
constexpr double kGradRelTol = 1e-4;
constexpr double kGradSeconds = 30.0;
constexpr double kToyFraction = 0.95;
constexpr double kToySeconds = 300.0;
constexpr double kSphereTarget = 1e-6;
constexpr int kSphereGenerations = 200;
constexpr int kTrendSeeds = 5;
constexpr int kTrendMinSeeds = 4;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Outcome physics_oracles() {
  const auto t0 = Clock::now();
  Rng rng(101);
  std::uniform_int_distribution<int> uavs(2, 3), users(1, 4);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double worst = 0.0;
  int instances = 0;
  for (; instances < 1000; ++instances) {
    ScenarioConfig cfg = fixture::small_config(uavs(rng), users(rng), 1);
    cfg.ellipse_slack = 5.0;
    const WorldState w = fixture::random_world(cfg, rng);
    const auto a = fixture::random_association(cfg.uav_count, cfg.comm_user_count + 1, rng);
    const auto plan = fixture::random_plan(a, cfg.antenna_count, rng);
    const LinkTable links(w, cfg);
    auto rel = [](double got, double want) { return std::abs(got - want) / std::max(std::abs(want), 1e-300); };
    for (int k = 0; k < cfg.comm_user_count; ++k) {
      const double got = comm_sinr(k, links, plan, a, cfg.comm_user_count, cfg.max_tx_power_w, cfg.comm_noise_w,
                                   cfg.interference);
      worst = std::max(worst, rel(got, oracle::comm_sinr(k, w, plan, a, cfg, cfg.interference)));
    }

    const int target = cfg.comm_user_count;
    const SensingLink link = make_sensing_link(links, 0, 1, target, cfg.sensing_ref_gain, 1.0);
    std::vector<double> draws(w.nodes.size());
    for (auto& d : draws) d = u01(rng);
    ClutterSet clutter = clutter_set(link, w, links, draws, 0.3, cfg.ellipse_slack);
    if (clutter.members.size() > 2) clutter.members.resize(2);
    std::vector<oracle::Scatterer> sc;
    for (const auto& c : clutter.members)
      sc.push_back({w.nodes[static_cast<std::size_t>(c.user)].position, c.coefficient});
    const CVec beam = fixture::random_beam(cfg.antenna_count, rng);
    const Vec3& pt = w.nodes[static_cast<std::size_t>(target)].position;
    const double gain = cfg.sensing_ref_gain / (oracle::distance(w.uavs[0].position, pt) *
                                                oracle::distance(w.uavs[1].position, pt));
    const double want = oracle::sensing_sinr(w.uavs[0], w.uavs[1], pt, gain, sc, oracle::to_vec(beam),
                                             cfg.wavelength, cfg.sensing_noise_w);
    worst = std::max(worst, rel(sensing_sinr(link, beam, clutter, cfg.sensing_noise_w), want));
  }
  const double secs = seconds_since(t0);
  return {worst <= kOracleRelTol && secs < kOracleSeconds,
          std::to_string(instances) + " instances, worst relative error " + fmt("%.2e", worst) + ", " +
              fmt("%.2f s", secs)};
}

Outcome compensation() {
  const auto t0 = Clock::now();
  Rng rng(102);
  std::uniform_real_distribution<double> ang(-kPi / 4, kPi / 4), head(0.0, 2 * kPi);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const Attitude att{ang(rng), ang(rng), ang(rng)};
    worst = std::max(worst, std::abs(level_axis(att, head(rng)).z()));
  }
  const double secs = seconds_since(t0);
  return {worst < kLevelTol && secs < kLevelSeconds,
          "10000 attitudes, max |z| " + fmt("%.2e", worst) + ", " + fmt("%.3f s", secs)};
}

Outcome steering_geometry() {
  Rng rng(103);
  const ScenarioConfig cfg = table1_config();
  std::uniform_real_distribution<double> raw(-1.5, 1.5), cosine(-1.0, 1.0);
  double worst_modulus = 0.0;
  int infeasible = 0;
  for (int i = 0; i < 10000; ++i) {
    std::vector<double> r(static_cast<std::size_t>(cfg.antenna_count));
    for (auto& x : r) x = raw(rng) * cfg.max_offset;
    const ArrayGeometry g = project_geometry(r, cfg.max_offset, cfg.min_spacing);
    if (!g.feasible()) ++infeasible;
    const CVec a = steering_vector_cos(g.offsets, cosine(rng), cfg.wavelength);
    for (int m = 0; m < a.size(); ++m) worst_modulus = std::max(worst_modulus, std::abs(std::abs(a[m]) - 1.0));
  }
  const bool table = uniform_geometry(4, 0.625, 0.0625).feasible() &&
                     project_geometry(uniform_geometry(4, 0.625, 0.0625).offsets, 0.625, 0.0625).feasible();
  return {worst_modulus <= kUnitModulusTol && infeasible == 0 && table,
          "10000 projections, " + std::to_string(infeasible) + " infeasible, max |1 - |a_m|| " +
              fmt("%.1e", worst_modulus) + ", reference geometry " + (table ? "feasible" : "infeasible")};
}

Outcome clustering() {
  Rng rng(104);
  const HdbscanParams params{2, 2, 50.0};
  // Planted blobs: uniform disks of radius `spread`, centres at least four spreads apart.
  const double spread = 30.0;
  std::uniform_real_distribution<double> xy(spread, 500.0 - spread), unit(0.0, 1.0);
  int recovered = 0;
  for (int instance = 0; instance < 20; ++instance) {
    const int k = 2 + instance % 2;
    std::vector<Vec2> centers;
    while (static_cast<int>(centers.size()) < k) {
      const Vec2 c(xy(rng), xy(rng));
      bool ok = true;
      for (const auto& o : centers) ok = ok && (o - c).norm() >= 4.0 * spread;
      if (ok) centers.push_back(c);
    }
    std::vector<Vec2> pts;
    std::vector<int> truth;
    for (int c = 0; c < k; ++c)
      for (int i = 0; i < 6; ++i) {
        const double r = spread * std::sqrt(unit(rng)), a = 2 * kPi * unit(rng);
        pts.push_back(centers[static_cast<std::size_t>(c)] + r * Vec2(std::cos(a), std::sin(a)));
        truth.push_back(c);
      }
    if (oracle::adjusted_rand_index(hdbscan_cluster(pts, params).labels, truth) == 1.0) ++recovered;
  }

  int hungarian_ok = 0, hungarian_total = 0;
  std::uniform_real_distribution<double> cost(0.0, 100.0);
  for (int n = 1; n <= 6; ++n)
    for (int cols = n; cols <= n + 1; ++cols)
      for (int trial = 0; trial < 100; ++trial, ++hungarian_total) {
        Eigen::MatrixXd c(n, cols);
        for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = std::round(cost(rng));
        const auto assign = hungarian_assign(c);
        std::set<int> used(assign.begin(), assign.end());
        double total = 0.0;
        for (int r = 0; r < n; ++r) total += c(r, assign[static_cast<std::size_t>(r)]);
        if (static_cast<int>(used.size()) == n && total == oracle::brute_force_assignment(c)) ++hungarian_ok;
      }

  int violations = 0;
  std::uniform_real_distribution<double> step(-4.0, 4.0);
  std::uniform_int_distribution<int> users(1, 10);
  ScenarioConfig cfg;
  WorldState w;
  for (int t = 0; t < 10000; ++t) {
    if (t % 500 == 0) {
      cfg = fixture::small_config(2 + t / 500 % 3, users(rng), 1 + t / 500 % 3);
      w = fixture::random_world(cfg, rng);
    }
    for (auto& u : w.uavs) u.position += Vec3(step(rng), step(rng), 0);
    for (auto& n : w.nodes) n.position += Vec3(step(rng), step(rng), 0) * 0.2;
    const ClusterResult clusters = hdbscan_cluster(comm_ground_points(w), params);
    const AssociationMatrix a = update_association(w, clusters, assign_clusters(w.uavs, clusters), 5);
    bool ok = a.each_node_served_once();
    for (int l : uav_loads(a, w.comm_count())) ok = ok && l <= 5;
    if (!ok) ++violations;
  }
  return {recovered == 20 && hungarian_ok == hungarian_total && violations == 0,
          "ARI 1 on " + std::to_string(recovered) + "/20 blob sets, Hungarian exact on " +
              std::to_string(hungarian_ok) + "/" + std::to_string(hungarian_total) + ", " +
              std::to_string(violations) + " association violations in 10000 steps"};
}

Outcome gradients() {
  const auto t0 = Clock::now();
  const double c = gradcheck::critic(1, 10), p = gradcheck::policy(1, 10), e = gradcheck::entropy(1, 10);
  const double secs = seconds_since(t0);
  return {std::max({c, p, e}) <= kGradRelTol && secs < kGradSeconds,
          "worst relative error critic " + fmt("%.1e", c) + ", policy " + fmt("%.1e", p) + ", entropy " +
              fmt("%.1e", e) + ", " + fmt("%.2f s", secs)};
}

Outcome toy_control() {
  const auto t0 = Clock::now();
  SacConfig sac;
  sac.hidden = {32, 32};
  sac.batch_size = 64;
  sac.buffer_capacity = 5000;
  sac.learning_rate = 3e-3;
  sac.epochs = 60;
  sac.seed = 7;
  ToyEnv env;
  const TrainResult trained = sac_train(env, sac);
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 0; s < 20; ++s) seeds.push_back(9000 + s);
  const double reward = evaluate_policy(trained.agent, env, seeds);
  const double sac_secs = seconds_since(t0);

  CmaesConfig cfg;
  cfg.max_generations = kSphereGenerations;
  cfg.seed = 5;
  cfg.target = kSphereTarget;
  const CmaesResult r =
      cmaes_optimize([](const RVec& x) { return x.squaredNorm(); }, RVec::Constant(10, 1.0), cfg);
  const bool sac_ok = reward >= kToyFraction * ToyEnv::optimal_reward() && sac_secs < kToySeconds;
  const bool cma_ok = r.best_f < kSphereTarget && r.generations <= kSphereGenerations;
  return {sac_ok && cma_ok, "SAC toy reward " + fmt("%.4f", reward) + " of optimum 1 in " + fmt("%.1f s", sac_secs) +
                                "; CMA-ES sphere " + fmt("%.2e", r.best_f) + " after " +
                                std::to_string(r.generations) + " generations"};
}

// scheme -> value -> seed -> mean sum rate, from one or more sweep CSVs.
using RateTable = std::map<std::string, std::map<double, std::map<std::uint64_t, double>>>;

bool read_sweep(const fs::path& path, RateTable& table) {
  std::ifstream in(path);
  if (!in) return false;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    if (cells.size() < 5) return false;
    table[cells[2]][std::stod(cells[1])][std::stoull(cells[3])] = std::stod(cells[4]);
  }
  return true;
}

// Seeds (1..kTrendSeeds) for which `holds(seed)` is true; -1 when data is missing.
template <typename F>
int count_seeds(F holds) {
  int n = 0;
  for (std::uint64_t s = 1; s <= kTrendSeeds; ++s) {
    const int r = holds(s);
    if (r < 0) return -1;
    n += r;
  }
  return n;
}

int at_least(const RateTable& t, const std::string& a, double va, const std::string& b, double vb,
             std::uint64_t seed) {
  try {
    return t.at(a).at(va).at(seed) >= t.at(b).at(vb).at(seed) ? 1 : 0;
  } catch (const std::out_of_range&) {
    return -1;
  }
}

Outcome scheme_trends(const fs::path& results) {
  RateTable t;
  if (!read_sweep(results / "schemes" / "sweep.csv", t))
    return {false, "missing " + (results / "schemes" / "sweep.csv").string() + " (run tools/run_trends.sh)"};
  const double v = 9;
  const int ma_fa = count_seeds([&](auto s) { return at_least(t, "proposed", v, "s2", v, s); });
  const int lawn = count_seeds([&](auto s) { return at_least(t, "s3", v, "s4", v, s); });
  if (ma_fa < 0 || lawn < 0) return {false, "incomplete scheme results"};
  // Relative MA-over-FA gain averaged over seeds and the (proposed, s2), (s1, s2), (s3, s4) pairs present.
  double gain = 0.0;
  int pairs = 0;
  for (auto [ma, fa] : {std::pair{"proposed", "s2"}, std::pair{"s1", "s2"}, std::pair{"s3", "s4"}}) {
    if (!t.count(ma) || !t.count(fa)) continue;
    for (std::uint64_t s = 1; s <= kTrendSeeds; ++s) {
      const double r_ma = t.at(ma).at(v).at(s), r_fa = t.at(fa).at(v).at(s);
      gain += (r_ma - r_fa) / r_fa;
      ++pairs;
    }
  }
  gain /= std::max(pairs, 1);
  return {ma_fa >= kTrendMinSeeds && lawn >= kTrendMinSeeds && gain > 0.0,
          "proposed >= s2 in " + std::to_string(ma_fa) + "/5 seeds, s3 >= s4 in " + std::to_string(lawn) +
              "/5, mean MA-over-FA gain " + fmt("%+.2f%%", 100.0 * gain)};
}

Outcome parameter_trends(const fs::path& results) {
  RateTable users, threshold, base;
  const bool have = read_sweep(results / "users" / "sweep.csv", users) &&
                    read_sweep(results / "threshold" / "sweep.csv", threshold) &&
                    read_sweep(results / "schemes" / "sweep.csv", base);
  if (!have) return {false, "missing sweep CSVs under " + results.string() + " (run tools/run_trends.sh)"};
  // The reference point (9 users, 10 dB) comes from the scheme comparison.
  for (auto& [seed, rate] : base["proposed"][9.0]) {
    users["proposed"][9.0][seed] = rate;
    threshold["proposed"][10.0][seed] = rate;
  }
  auto monotone = [](const RateTable& t, const std::vector<double>& values) {
    return count_seeds([&](std::uint64_t s) {
      int ok = 1;
      for (std::size_t i = 0; i + 1 < values.size(); ++i) {
        const int r = at_least(t, "proposed", values[i], "proposed", values[i + 1], s);
        if (r < 0) return -1;
        ok &= r;
      }
      return ok;
    });
  };
  const int k = monotone(users, {6, 9, 12});
  std::vector<double> thr;
  for (const auto& [v, _] : threshold["proposed"]) thr.push_back(v);
  const int g = thr.size() == 3 ? monotone(threshold, thr) : -1;
  if (k < 0 || g < 0) return {false, "incomplete parameter sweeps"};
  return {k >= kTrendMinSeeds && g >= kTrendMinSeeds,
          "non-increasing in users for " + std::to_string(k) + "/5 seeds, in sensing threshold for " +
              std::to_string(g) + "/5"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "uavisac_acceptance_determinism";
  fs::remove_all(root);
  ScenarioConfig cfg = table1_config();
  cfg.episode_length = 30;
  auto run = [&](const std::string& name, int threads) {
    const fs::path dir = root / name;
    RunOptions o;
    o.sac.hidden = {32};
    o.sac.batch_size = 32;
    o.sac.epochs = 3;
    o.sac.updates_per_epoch = 5;
    o.eval_episodes = 2;
    o.trace_path = dir / "trace.jsonl";
    o.cluster_path = dir / "clusters.jsonl";
    o.training_log_path = dir / "training_log.csv";
    o.checkpoint_path = dir / "checkpoint.json";
    const RunRecord r = run_scheme(Scheme::kProposed, cfg, 42, o);
    write_records_csv(dir / "run.csv", {r});
    write_learning_curves_csv(dir / "learning_curve.csv", {r});
    write_trajectory_csv(dir / "trajectory.csv", r.trajectory);
    const auto rows = sweep(SweepParameter::kSensingThreshold, {5, 15}, {Scheme::kS1, Scheme::kS4}, {1, 2}, cfg, o,
                            threads);
    write_sweep_csv(dir / "sweep.csv", SweepParameter::kSensingThreshold, rows);
    write_sweep_summary_csv(dir / "sweep_summary.csv", SweepParameter::kSensingThreshold, rows);
    return dir;
  };
  const fs::path a = run("a", 1), b = run("b", 2);
  int files = 0, differing = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    ++files;
    if (slurp(entry.path()) != slurp(b / entry.path().filename())) ++differing;
  }
  fs::remove_all(root);
  return {files == 9 && differing == 0,
          std::to_string(files) + " output files compared, " + std::to_string(differing) + " differ"};
}

}  // namespace

int main(int argc, char** argv) {
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  fs::path results = UAVISAC_RESULTS_DIR;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--results" && i + 1 < argc) results = argv[++i];
    else if (arg == "--only" && i + 1 < argc) only.insert(std::stoi(argv[++i]));
    else {
      std::fprintf(stderr, "usage: acceptance [--results DIR] [--only N]...\n");
      return 64;
    }
  }

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"physics oracles", physics_oracles},
      {"compensation levels the array", compensation},
      {"steering and geometry", steering_geometry},
      {"clustering and association", clustering},
      {"gradient checks", gradients},
      {"toy control", toy_control},
      {"scheme trends", [&] { return scheme_trends(results); }},
      {"user and threshold trends", [&] { return parameter_trends(results); }},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failed;
}
