#ifndef WPT_SCENARIO_HPP_
#define WPT_SCENARIO_HPP_

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "wpt/harvest.hpp"

namespace wpt {

struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

double distance(const Point& a, const Point& b);

struct NetworkConfig {
  int n_sensors = 8;
  int horizon = 20;
  double power_budget = 3.0;     // W, per-slot beacon budget
  double noise_variance = 1e-7;  // W
  double tau_info = 1.0;
  double tau_energy = 1.0;
  Point beacon{-1.0, 0.0};
  Point sink{4.0, 0.0};
  std::vector<Point> nodes;  // empty until validated; then n_sensors entries
  bool operator==(const NetworkConfig&) const = default;
};

// Node j (1-based) at (0, j - n/2); for n = 8 this is (0, j - 4).
std::vector<Point> default_node_positions(int n_sensors);

struct ChannelConfig {
  double aperture_beacon = 0.2;  // A_E, m^2
  double aperture_sink = 0.2;    // A_I, m^2
  double aperture_node = 0.005;  // A_N, m^2
  double frequency = 2.45e9;     // Hz
  double speed_of_light = 3e8;   // m/s
  double path_exponent_energy = 2.0;
  double path_exponent_info = 3.0;
  double fading_mean = 1.0;
  double fading_variance = 0.2;  // total variance of the proper complex Gaussian
  bool deterministic_fading = false;

  double wavelength() const { return speed_of_light / frequency; }
  bool operator==(const ChannelConfig&) const = default;
};

struct FieldConfig {
  int period = 4;
  double eigenvalue_base = 0.2;
  bool diagonal = false;  // U = I instead of Haar draws
  bool operator==(const FieldConfig&) const = default;
};

struct HarvestConfig {
  EhVariant active = EhVariant::Linear;
  EhModel linear = default_model(EhVariant::Linear);
  EhModel quadratic = default_model(EhVariant::Quadratic);
  EhModel logistic = default_model(EhVariant::Logistic);

  const EhModel& model(EhVariant v) const;
  const EhModel& active_model() const { return model(active); }
  bool operator==(const HarvestConfig&) const = default;
};

struct SolverConfig {
  bool clamp_quadratic = true;
  double initial_barrier = 1.0;
  double final_barrier = 1e-9;
  // Stages continue past final_barrier until (constraints * barrier) <= gap_tolerance * objective.
  double gap_tolerance = 1e-10;
  int max_newton_steps = 200;
  bool operator==(const SolverConfig&) const = default;
};

struct RlConfig {
  long long episodes = 20000;
  int batch_episodes = 20;
  double gamma = 0.995;
  double gae_lambda = 0.98;
  double kl_target = 0.01;
  int cg_iterations = 10;
  double cg_damping = 0.1;
  int max_backtracks = 10;
  double value_learning_rate = 1e-3;
  int value_epochs = 10;
  int value_minibatch = 64;
  double initial_log_std = 1.0;
  std::vector<int> policy_hidden{32, 32, 32};
  std::vector<int> value_hidden{32, 32, 32};
  bool obs_include_phase = false;
  bool operator==(const RlConfig&) const = default;

  // Hidden sizes of the 8-node reference agent.
  static std::vector<int> paper_policy_hidden() { return {90, 127, 180}; }
  static std::vector<int> paper_value_hidden() { return {90, 21, 5}; }
};

/// Full experiment description. Immutable once validated.
struct ScenarioConfig {
  NetworkConfig network;
  ChannelConfig channel;
  FieldConfig field;
  HarvestConfig harvest;
  SolverConfig solver;
  RlConfig rl;
  std::uint64_t seed = 0;

  // Fills defaulted geometry and throws ValidationError naming the field on any violation.
  void validate();

  int n() const { return network.n_sensors; }
  int horizon() const { return network.horizon; }
  double distance_energy(int node) const { return distance(network.nodes.at(node), network.beacon); }
  double distance_info(int node) const { return distance(network.nodes.at(node), network.sink); }

  bool operator==(const ScenarioConfig&) const = default;
};

// Defaults everywhere, validated.
ScenarioConfig default_scenario();

ScenarioConfig scenario_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const ScenarioConfig& config);
ScenarioConfig load_scenario(const std::filesystem::path& path);

using RandomStream = std::mt19937_64;

// Independent deterministic stream keyed by (seed, label, index).
RandomStream rng_stream(std::uint64_t seed, std::string_view label, std::uint64_t index);
inline RandomStream rng_stream(const ScenarioConfig& config, std::string_view label, std::uint64_t index) {
  return rng_stream(config.seed, label, index);
}

}  // namespace wpt

#endif  // WPT_SCENARIO_HPP_
