#ifndef WPT_ENVIRONMENT_HPP_
#define WPT_ENVIRONMENT_HPP_

#include <Eigen/Dense>
#include <span>
#include <utility>

#include "wpt/channel.hpp"
#include "wpt/field.hpp"
#include "wpt/harvest.hpp"
#include "wpt/scenario.hpp"

namespace wpt {

/// Fixed ingredients of one episode. Non-owning.
struct EnvContext {
  const ScenarioConfig& config;
  const FieldStatistics& field;
  std::span<const SlotState> slots;
  bool include_phase = false;

  int horizon() const { return static_cast<int>(slots.size()); }
  int n() const { return config.n(); }
};

struct EnvState {
  int t = 1;                // next slot to act in, 1-based
  Eigen::VectorXd carried;  // battery left over from slot t-1, J
  double last_reward = 0.0;

  bool done(const EnvContext& ctx) const { return t > ctx.horizon(); }
};

struct MappedAction {
  Eigen::VectorXd q;    // beacon allocation, sums to P_B / tau_E
  Eigen::VectorXd rho;  // battery ratio in [0, 1]
};

struct StepResult {
  EnvState next;
  Eigen::VectorXd observation;
  double reward = 0.0;
  Eigen::VectorXd q;
  Eigen::VectorXd p;
  Eigen::VectorXd battery;  // available energy before transmission
};

// n_s batteries and the last reward; if requested, then the one-hot covariance
// phase of the coming slot and its position t / T in the horizon.
int observation_size(int n_sensors, int period, bool include_phase);

// First n entries are softmax logits, the remaining n are battery-ratio logits.
MappedAction map_action(const Eigen::VectorXd& action, double power_budget, double tau_energy);

Eigen::VectorXd observe(const EnvContext& ctx, const EnvState& state);

std::pair<EnvState, Eigen::VectorXd> env_reset(const EnvContext& ctx);

StepResult env_step(const EnvContext& ctx, const EnvState& state, const Eigen::VectorXd& action,
                    const EhModel& model);

}  // namespace wpt

#endif  // WPT_ENVIRONMENT_HPP_
