#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "uavisac/types.hpp"

namespace uavisac {

enum class InterferenceModel {
  kReceived,  ///< interferer beams projected on the victim user's channel
  kLiteral,   ///< interferer beams projected on their own intended user's channel
};

/// Scenario parameters. Values with a unit suffix in the key name are stored in
/// that unit; `*_dbm`/`*_db` keys are converted to linear fields on validation.
struct ScenarioConfig {
  // geometry
  double area_side = 500.0;
  int uav_count = 3;
  int comm_user_count = 9;
  int target_count = 3;
  double z_min = 80.0;
  double z_max = 120.0;
  double uav_max_speed = 4.0;
  double user_max_speed = 0.8;
  double collision_distance = 20.0;
  int mobility_resample_interval = 20;
  double attitude_max_deg = 5.0;
  double array_heading_deg = 0.0;

  // array
  int antenna_count = 4;
  double max_offset = 0.625;
  double min_spacing = 0.0625;

  // radio
  double max_tx_power_dbm = 30.0;
  double bandwidth_hz = 20e6;
  double carrier_frequency_hz = 2.4e9;
  double noise_psd_dbm_hz = -110.0;
  double ref_channel_gain_db = -30.0;
  InterferenceModel interference = InterferenceModel::kReceived;
  bool per_uav_power_cap = true;  ///< sum of rho^2 over all links of a UAV, sensing included, <= 1
  double power_quantization = 0.0;

  // sensing
  double sensing_ref_gain_db = -30.0;
  std::vector<double> target_rcs{1.0};
  double sensing_noise_dbm = -132.0;
  double clutter_coefficient_scale = 0.3;
  double ellipse_slack = 0.1;
  double sensing_threshold_db = 10.0;

  // reward
  double penalty_sensing = 1.0;
  double penalty_speed = 1.0;
  double penalty_collision = 5.0;
  double sensing_penalty_cap = 100.0;

  // association
  int assoc_interval = 10;
  int max_uav_load = 5;
  int hdbscan_min_cluster_size = 2;
  int hdbscan_min_samples = 2;
  double hdbscan_epsilon = 50.0;

  int episode_length = 200;
  std::uint64_t rng_seed = 1;

  // derived (filled by validate())
  double wavelength = 0.0;
  double max_tx_power_w = 0.0;
  double comm_noise_w = 0.0;
  double sensing_noise_w = 0.0;
  double ref_channel_gain = 0.0;
  double sensing_ref_gain = 0.0;
  double sensing_threshold = 0.0;

  /// RCS of target `k`; a single configured value applies to every target.
  double rcs(int k) const;

  /// Checks invariants and fills the derived fields. Throws Error naming the field.
  void validate();
};

/// Default configuration with derived fields filled.
ScenarioConfig table1_config();

/// Parses the flat `key = value` format; `#` starts a comment.
ScenarioConfig parse_config(std::string_view text);
ScenarioConfig load_config(const std::filesystem::path& path);

/// Sets one key from its textual value. Unknown keys throw.
void apply_override(ScenarioConfig& cfg, std::string_view key, std::string_view value);

/// Re-emits the config in the file format (round-trips through parse_config).
std::string dump_config(const ScenarioConfig& cfg);

/// FNV-1a over the canonical dump; stable across platforms.
std::uint64_t config_hash(const ScenarioConfig& cfg);

}  // namespace uavisac
