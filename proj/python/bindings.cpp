// Python module: scenario config, the ISAC environment, the association
// primitives, CMA-ES and the training harness.
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "uavisac/association.hpp"
#include "uavisac/harness.hpp"
#include "uavisac/hdbscan.hpp"

namespace py = pybind11;
using namespace uavisac;

namespace {

std::string to_text(const py::handle& v) {
  if (py::isinstance<py::bool_>(v)) return v.cast<bool>() ? "true" : "false";
  if (py::isinstance<py::list>(v) || py::isinstance<py::tuple>(v)) {
    std::string out;
    for (const auto& item : v) out += (out.empty() ? "" : ",") + py::str(item).cast<std::string>();
    return out;
  }
  return py::str(v).cast<std::string>();
}

ScenarioConfig make_config(const std::optional<std::string>& path, const py::dict& overrides) {
  ScenarioConfig cfg = path ? load_config(*path) : table1_config();
  for (const auto& [k, v] : overrides) apply_override(cfg, k.cast<std::string>(), to_text(v));
  cfg.validate();
  return cfg;
}

py::dict record_dict(const RunRecord& r) {
  py::dict d;
  d["scheme"] = r.scheme;
  d["seed"] = r.seed;
  d["epoch_rewards"] = r.epoch_rewards;
  d["mean_sum_rate_bps"] = r.mean_sum_rate_bps;
  d["mean_reward"] = r.mean_reward;
  d["sensing_satisfaction"] = r.sensing_satisfaction;
  std::vector<std::vector<std::array<double, 3>>> traj;
  for (const auto& slot : r.trajectory) {
    traj.emplace_back();
    for (const auto& p : slot) traj.back().push_back({p.x(), p.y(), p.z()});
  }
  d["trajectory"] = traj;
  return d;
}

py::dict reward_dict(const RewardBreakdown& r) {
  py::dict d;
  d["sum_rate_bps"] = r.sum_rate_bps;
  d["sum_rate_term"] = r.sum_rate_term;
  d["sensing_penalty"] = r.sensing_penalty;
  d["collision_penalty"] = r.collision_penalty;
  d["speed_penalty"] = r.speed_penalty;
  d["total"] = r.total;
  return d;
}

Eigen::MatrixXd uav_positions(const IsacEnv& env) {
  Eigen::MatrixXd out(env.world().uavs.size(), 3);
  for (std::size_t n = 0; n < env.world().uavs.size(); ++n) out.row(static_cast<Eigen::Index>(n)) = env.world().uavs[n].position;
  return out;
}

}  // namespace

PYBIND11_MODULE(_uavisac, m) {
  m.doc() = "Multi-UAV ISAC simulator with movable antenna arrays";
  py::register_exception<Error>(m, "UavisacError", PyExc_ValueError);

  py::class_<ScenarioConfig>(m, "Config")
      .def(py::init(&make_config), py::arg("path") = py::none(), py::arg("overrides") = py::dict())
      .def("set", [](ScenarioConfig& c, const std::string& k, const py::handle& v) {
        apply_override(c, k, to_text(v));
        c.validate();
      })
      .def("dump", &dump_config)
      .def("hash", &config_hash)
      .def_readonly("uav_count", &ScenarioConfig::uav_count)
      .def_readonly("comm_user_count", &ScenarioConfig::comm_user_count)
      .def_readonly("target_count", &ScenarioConfig::target_count)
      .def_readonly("antenna_count", &ScenarioConfig::antenna_count)
      .def_readonly("episode_length", &ScenarioConfig::episode_length)
      .def_readonly("wavelength", &ScenarioConfig::wavelength)
      .def_readonly("max_offset", &ScenarioConfig::max_offset)
      .def_readonly("min_spacing", &ScenarioConfig::min_spacing)
      .def_readonly("sensing_threshold", &ScenarioConfig::sensing_threshold);

  py::class_<IsacEnv>(m, "Env")
      .def(py::init([](const ScenarioConfig& cfg, const std::string& scheme) {
             return IsacEnv(cfg, scheme_options(parse_scheme(scheme)));
           }),
           py::arg("config"), py::arg("scheme") = "proposed")
      .def_property_readonly("observation_dim", &IsacEnv::observation_dim)
      .def_property_readonly("action_dim", &IsacEnv::action_dim)
      .def_property_readonly("slot", &IsacEnv::slot)
      .def_property_readonly("done", &IsacEnv::done)
      .def("reset", [](IsacEnv& e, std::uint64_t seed) { return py::array(py::cast(e.reset(seed))); }, py::arg("seed"))
      .def("step",
           [](IsacEnv& e, const std::vector<double>& action) {
             StepOutcome out = e.step_detailed(action);
             py::dict info;
             info["reward"] = reward_dict(out.reward);
             info["comm_sinr"] = out.metrics.comm_sinr;
             info["sensing_sinr"] = out.metrics.sensing_sinr;
             info["collisions"] = out.metrics.collisions;
             return py::make_tuple(py::array(py::cast(out.observation)), out.reward.total, out.done, info);
           },
           py::arg("action"))
      .def("evaluate_static", [](const IsacEnv& e, const std::vector<double>& a) { return reward_dict(e.evaluate_static(a)); })
      .def("uav_positions", &uav_positions)
      .def("serving_uav", [](const IsacEnv& e) {
        std::vector<int> out;
        for (int k = 0; k < e.association().alpha.node_count(); ++k) out.push_back(e.association().alpha.serving_uav(k));
        return out;
      });

  m.def(
      "hdbscan",
      [](const Eigen::MatrixX2d& points, int min_cluster_size, int min_samples, double epsilon) {
        std::vector<Vec2> pts;
        for (Eigen::Index i = 0; i < points.rows(); ++i) pts.emplace_back(points(i, 0), points(i, 1));
        return hdbscan_cluster(pts, {min_cluster_size, min_samples, epsilon}).labels;
      },
      py::arg("points"), py::arg("min_cluster_size") = 2, py::arg("min_samples") = 2, py::arg("epsilon") = 0.0,
      "Cluster labels per point, -1 for noise.");
  m.def("hungarian", &hungarian_assign, py::arg("cost"), "Column assigned to each row (rows <= cols).");
  m.def(
      "project_geometry",
      [](const std::vector<double>& raw, double max_offset, double min_spacing) {
        return project_geometry(raw, max_offset, min_spacing).offsets;
      },
      py::arg("raw"), py::arg("max_offset"), py::arg("min_spacing"));
  m.def(
      "level_axis",
      [](double roll, double pitch, double yaw, double heading) {
        return Eigen::Vector3d(level_axis(Attitude{roll, pitch, yaw}, heading));
      },
      py::arg("roll"), py::arg("pitch"), py::arg("yaw"), py::arg("heading"), "Compensated array axis (radians in).");
  m.def(
      "steering_vector",
      [](const std::vector<double>& offsets, double cos_theta, double wavelength) {
        return Eigen::VectorXcd(steering_vector_cos(offsets, cos_theta, wavelength));
      },
      py::arg("offsets"), py::arg("cos_theta"), py::arg("wavelength"));
  m.def(
      "cmaes",
      [](const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x0, double sigma0,
         int max_generations, std::uint64_t seed, double target) {
        CmaesConfig cfg;
        cfg.sigma0 = sigma0;
        cfg.max_generations = max_generations;
        cfg.seed = seed;
        cfg.target = target;
        const CmaesResult r = cmaes_optimize([&](const RVec& x) { return f(x); }, x0, cfg);
        return py::make_tuple(Eigen::VectorXd(r.best_x), r.best_f, r.generations);
      },
      py::arg("objective"), py::arg("x0"), py::arg("sigma0") = 0.3, py::arg("max_generations") = 200,
      py::arg("seed") = 1, py::arg("target") = -1e300, "Minimizes objective; returns (x, f, generations).");
  m.def(
      "train",
      [](const ScenarioConfig& cfg, const std::string& scheme, std::uint64_t seed, int epochs, int updates_per_epoch,
         std::vector<int> hidden, int batch_size, int eval_episodes) {
        RunOptions o;
        o.sac.epochs = epochs;
        o.sac.updates_per_epoch = updates_per_epoch;
        o.sac.hidden = std::move(hidden);
        o.sac.batch_size = batch_size;
        o.eval_episodes = eval_episodes;
        const Scheme s = parse_scheme(scheme);
        RunRecord r;
        {
          py::gil_scoped_release release;
          r = run_scheme(s, cfg, seed, o);
        }
        return record_dict(r);
      },
      py::arg("config"), py::arg("scheme") = "proposed", py::arg("seed") = 1, py::arg("epochs") = 150,
      py::arg("updates_per_epoch") = -1, py::arg("hidden") = std::vector<int>{256, 256}, py::arg("batch_size") = 256,
      py::arg("eval_episodes") = 3, "Trains SAC on one scheme and evaluates the deterministic policy.");
}
