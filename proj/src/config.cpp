#include "uavisac/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace uavisac {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(std::string_view key, std::string_view v) {
  std::string s = trim(v);
  try {
    std::size_t used = 0;
    double x = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return x;
  } catch (const std::exception&) {
    throw Error("config: field '" + std::string(key) + "' expects a number, got '" + s + "'");
  }
}

long long parse_int(std::string_view key, std::string_view v) {
  std::string s = trim(v);
  long long x = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw Error("config: field '" + std::string(key) + "' expects an integer, got '" + s + "'");
  return x;
}

bool parse_bool(std::string_view key, std::string_view v) {
  std::string s = trim(v);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw Error("config: field '" + std::string(key) + "' expects a boolean, got '" + s + "'");
}

// Shortest text that reads back to the same double.
std::string fmt_double(double x) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

struct Field {
  const char* name;
  const char* comment;
  std::function<std::string(const ScenarioConfig&)> get;
  std::function<void(ScenarioConfig&, std::string_view)> set;
};

template <typename T>
Field number_field(const char* name, const char* comment, T ScenarioConfig::*member) {
  Field f{name, comment, nullptr, nullptr};
  f.get = [member](const ScenarioConfig& c) {
    if constexpr (std::is_floating_point_v<T>) return fmt_double(c.*member);
    else return std::to_string(c.*member);
  };
  f.set = [member, name](ScenarioConfig& c, std::string_view v) {
    if constexpr (std::is_floating_point_v<T>) c.*member = parse_double(name, v);
    else c.*member = static_cast<T>(parse_int(name, v));
  };
  return f;
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> t;
    t.push_back(number_field("area_side", "m, side of the square service area", &ScenarioConfig::area_side));
    t.push_back(number_field("uav_count", "N", &ScenarioConfig::uav_count));
    t.push_back(number_field("comm_user_count", "K_c", &ScenarioConfig::comm_user_count));
    t.push_back(number_field("target_count", "K_s", &ScenarioConfig::target_count));
    t.push_back(number_field("z_min", "m", &ScenarioConfig::z_min));
    t.push_back(number_field("z_max", "m", &ScenarioConfig::z_max));
    t.push_back(number_field("uav_max_speed", "m/s (= m/slot)", &ScenarioConfig::uav_max_speed));
    t.push_back(number_field("user_max_speed", "m/s", &ScenarioConfig::user_max_speed));
    t.push_back(number_field("collision_distance", "m, D_0", &ScenarioConfig::collision_distance));
    t.push_back(number_field("mobility_resample_interval", "slots between user speed/heading draws",
                             &ScenarioConfig::mobility_resample_interval));
    t.push_back(number_field("attitude_max_deg", "deg, per-slot roll/pitch/yaw disturbance bound",
                             &ScenarioConfig::attitude_max_deg));
    t.push_back(number_field("array_heading_deg", "deg, array axis angle to x when level",
                             &ScenarioConfig::array_heading_deg));
    t.push_back(number_field("antenna_count", "M", &ScenarioConfig::antenna_count));
    t.push_back(number_field("max_offset", "m, D_off", &ScenarioConfig::max_offset));
    t.push_back(number_field("min_spacing", "m, D_min", &ScenarioConfig::min_spacing));
    t.push_back(number_field("max_tx_power_dbm", "dBm, P_max", &ScenarioConfig::max_tx_power_dbm));
    t.push_back(number_field("bandwidth_hz", "Hz, B", &ScenarioConfig::bandwidth_hz));
    t.push_back(number_field("carrier_frequency_hz", "Hz", &ScenarioConfig::carrier_frequency_hz));
    t.push_back(number_field("noise_psd_dbm_hz", "dBm/Hz; comm noise = psd * B", &ScenarioConfig::noise_psd_dbm_hz));
    t.push_back(number_field("ref_channel_gain_db", "dB, beta_0 at 1 m", &ScenarioConfig::ref_channel_gain_db));
    t.push_back(Field{
        "interference_model", "received | literal",
        [](const ScenarioConfig& c) {
          return std::string(c.interference == InterferenceModel::kLiteral ? "literal" : "received");
        },
        [](ScenarioConfig& c, std::string_view v) {
          const std::string s = trim(v);
          if (s == "received") c.interference = InterferenceModel::kReceived;
          else if (s == "literal") c.interference = InterferenceModel::kLiteral;
          else throw Error("config: field 'interference_model' expects received|literal, got '" + s + "'");
        }});
    t.push_back(Field{"per_uav_power_cap", "bool, enforce sum of rho^2 <= 1 over all links of a UAV (comm and sensing)",
                      [](const ScenarioConfig& c) { return std::string(c.per_uav_power_cap ? "true" : "false"); },
                      [](ScenarioConfig& c, std::string_view v) {
                        c.per_uav_power_cap = parse_bool("per_uav_power_cap", v);
                      }});
    t.push_back(number_field("power_quantization", "rho grid step, 0 = continuous",
                             &ScenarioConfig::power_quantization));
    t.push_back(number_field("sensing_ref_gain_db", "dB, kappa", &ScenarioConfig::sensing_ref_gain_db));
    t.push_back(Field{"target_rcs", "m^2, one value or a comma list per target",
                      [](const ScenarioConfig& c) {
                        std::string s;
                        for (std::size_t i = 0; i < c.target_rcs.size(); ++i) {
                          if (i) s += ",";
                          s += fmt_double(c.target_rcs[i]);
                        }
                        return s;
                      },
                      [](ScenarioConfig& c, std::string_view v) {
                        c.target_rcs.clear();
                        std::string s(v);
                        std::stringstream ss(s);
                        std::string item;
                        while (std::getline(ss, item, ',')) c.target_rcs.push_back(parse_double("target_rcs", item));
                        if (c.target_rcs.empty()) throw Error("config: field 'target_rcs' is empty");
                      }});
    t.push_back(number_field("sensing_noise_dbm", "dBm, sensing receiver noise after matched filtering",
                             &ScenarioConfig::sensing_noise_dbm));
    t.push_back(number_field("clutter_coefficient_scale", "clutter coefficient ~ U[0, scale * target gain]",
                             &ScenarioConfig::clutter_coefficient_scale));
    t.push_back(number_field("ellipse_slack", "relative slack on the bistatic range-sum ellipse",
                             &ScenarioConfig::ellipse_slack));
    t.push_back(number_field("sensing_threshold_db", "dB, Gamma_thr", &ScenarioConfig::sensing_threshold_db));
    t.push_back(number_field("penalty_sensing", "f_1", &ScenarioConfig::penalty_sensing));
    t.push_back(number_field("penalty_speed", "f_2", &ScenarioConfig::penalty_speed));
    t.push_back(number_field("penalty_collision", "per violating pair per slot", &ScenarioConfig::penalty_collision));
    t.push_back(number_field("sensing_penalty_cap", "cap on Gamma_thr/Gamma, in units of f_1",
                             &ScenarioConfig::sensing_penalty_cap));
    t.push_back(number_field("assoc_interval", "T_c, slots between reclustering", &ScenarioConfig::assoc_interval));
    t.push_back(number_field("max_uav_load", "xi, comm users per UAV", &ScenarioConfig::max_uav_load));
    t.push_back(number_field("hdbscan_min_cluster_size", "", &ScenarioConfig::hdbscan_min_cluster_size));
    t.push_back(number_field("hdbscan_min_samples", "", &ScenarioConfig::hdbscan_min_samples));
    t.push_back(number_field("hdbscan_epsilon", "m, cluster selection threshold", &ScenarioConfig::hdbscan_epsilon));
    t.push_back(number_field("episode_length", "T, slots", &ScenarioConfig::episode_length));
    t.push_back(number_field("rng_seed", "", &ScenarioConfig::rng_seed));
    return t;
  }();
  return table;
}

void require(bool ok, const char* field, const std::string& what) {
  if (!ok) throw Error(std::string("config: field '") + field + "': " + what);
}

}  // namespace

double ScenarioConfig::rcs(int k) const {
  if (target_rcs.size() == 1) return target_rcs.front();
  return target_rcs.at(static_cast<std::size_t>(k));
}

void ScenarioConfig::validate() {
  require(area_side > 0, "area_side", "must be positive");
  require(uav_count >= 2, "uav_count", "bistatic sensing needs at least 2 UAVs");
  require(comm_user_count >= 0, "comm_user_count", "must be non-negative");
  require(target_count >= 0, "target_count", "must be non-negative");
  require(z_min <= z_max, "z_min", "altitude bounds inverted");
  require(z_min > 0, "z_min", "must be positive");
  require(uav_max_speed > 0, "uav_max_speed", "must be positive");
  require(user_max_speed >= 0, "user_max_speed", "must be non-negative");
  require(collision_distance >= 0, "collision_distance", "must be non-negative");
  require(mobility_resample_interval >= 1, "mobility_resample_interval", "must be >= 1");
  require(attitude_max_deg >= 0 && attitude_max_deg < 90, "attitude_max_deg", "must be in [0, 90)");
  require(antenna_count >= 1, "antenna_count", "must be >= 1");
  require(max_offset > 0, "max_offset", "must be positive");
  require(min_spacing >= 0, "min_spacing", "must be non-negative");
  require((antenna_count - 1) * min_spacing <= 2 * max_offset, "antenna_count",
          "(M-1)*min_spacing exceeds the array segment 2*max_offset");
  require(bandwidth_hz > 0, "bandwidth_hz", "must be positive");
  require(carrier_frequency_hz > 0, "carrier_frequency_hz", "must be positive");
  require(target_rcs.size() == 1 || static_cast<int>(target_rcs.size()) == target_count, "target_rcs",
          "needs one value or one per target");
  for (double r : target_rcs) require(r > 0, "target_rcs", "must be positive");
  require(clutter_coefficient_scale >= 0, "clutter_coefficient_scale", "must be non-negative");
  require(ellipse_slack >= 0, "ellipse_slack", "must be non-negative");
  require(power_quantization >= 0 && power_quantization <= 1, "power_quantization", "must be in [0, 1]");
  require(penalty_sensing >= 0, "penalty_sensing", "must be non-negative");
  require(penalty_speed >= 0, "penalty_speed", "must be non-negative");
  require(penalty_collision >= 0, "penalty_collision", "must be non-negative");
  require(sensing_penalty_cap > 0, "sensing_penalty_cap", "must be positive");
  require(assoc_interval >= 1, "assoc_interval", "must be >= 1");
  require(max_uav_load >= 1, "max_uav_load", "must be >= 1");
  require(comm_user_count <= uav_count * max_uav_load, "max_uav_load",
          "comm_user_count exceeds uav_count * max_uav_load");
  require(hdbscan_min_cluster_size >= 2, "hdbscan_min_cluster_size", "must be >= 2");
  require(hdbscan_min_samples >= 1, "hdbscan_min_samples", "must be >= 1");
  require(hdbscan_epsilon >= 0, "hdbscan_epsilon", "must be non-negative");
  require(episode_length >= 1, "episode_length", "must be >= 1");

  wavelength = kSpeedOfLight / carrier_frequency_hz;
  max_tx_power_w = dbm_to_watts(max_tx_power_dbm);
  comm_noise_w = dbm_to_watts(noise_psd_dbm_hz) * bandwidth_hz;
  sensing_noise_w = dbm_to_watts(sensing_noise_dbm);
  ref_channel_gain = db_to_linear(ref_channel_gain_db);
  sensing_ref_gain = db_to_linear(sensing_ref_gain_db);
  sensing_threshold = db_to_linear(sensing_threshold_db);
}

ScenarioConfig table1_config() {
  ScenarioConfig c;
  c.validate();
  return c;
}

void apply_override(ScenarioConfig& cfg, std::string_view key, std::string_view value) {
  const std::string k = trim(key);
  for (const auto& f : fields()) {
    if (k == f.name) {
      f.set(cfg, value);
      return;
    }
  }
  throw Error("config: unknown field '" + k + "'");
}

ScenarioConfig parse_config(std::string_view text) {
  ScenarioConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw Error("config: line " + std::to_string(lineno) + ": expected 'key = value'");
    apply_override(cfg, body.substr(0, eq), body.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("config: cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const ScenarioConfig& cfg) {
  std::string out;
  for (const auto& f : fields()) {
    out += f.name;
    out += " = ";
    out += f.get(cfg);
    if (f.comment[0] != '\0') {
      out += "  # ";
      out += f.comment;
    }
    out += '\n';
  }
  return out;
}

std::uint64_t config_hash(const ScenarioConfig& cfg) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& f : fields()) {
    for (char ch : std::string(f.name) + "=" + f.get(cfg) + ";") {
      h ^= static_cast<unsigned char>(ch);
      h *= 1099511628211ULL;
    }
  }
  return h;
}

}  // namespace uavisac
