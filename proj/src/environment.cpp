#include "wpt/environment.hpp"

#include <cmath>

#include "wpt/errors.hpp"
#include "wpt/estimation.hpp"

namespace wpt {

using Eigen::VectorXd;

int observation_size(int n_sensors, int period, bool include_phase) {
  return n_sensors + 1 + (include_phase ? period + 1 : 0);
}

MappedAction map_action(const VectorXd& action, double power_budget, double tau_energy) {
  if (action.size() % 2 != 0) throw ValidationError("action: length must be 2 n_s");
  if (!action.allFinite()) throw NumericalError("action: non-finite entry");
  const auto n = action.size() / 2;
  const VectorXd logits = action.head(n);
  const VectorXd shifted = (logits.array() - logits.maxCoeff()).exp();
  MappedAction out;
  out.q = (power_budget / tau_energy) * shifted / shifted.sum();
  out.rho.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = action(n + i);
    out.rho(i) = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  }
  return out;
}

VectorXd observe(const EnvContext& ctx, const EnvState& state) {
  const int n = ctx.n();
  const int period = ctx.field.period();
  VectorXd obs = VectorXd::Zero(observation_size(n, period, ctx.include_phase));
  obs.head(n) = state.carried;
  obs(n) = state.last_reward;
  if (ctx.include_phase) {
    obs(n + 1 + state.t % period) = 1.0;
    obs(n + 1 + period) = static_cast<double>(state.t) / ctx.horizon();
  }
  return obs;
}

std::pair<EnvState, VectorXd> env_reset(const EnvContext& ctx) {
  EnvState state;
  state.t = 1;
  state.carried = VectorXd::Zero(ctx.n());
  state.last_reward = 0.0;
  return {state, observe(ctx, state)};
}

StepResult env_step(const EnvContext& ctx, const EnvState& state, const VectorXd& action, const EhModel& model) {
  if (state.done(ctx)) throw ValidationError("env_step: episode already finished");
  const int n = ctx.n();
  if (action.size() != 2 * n) throw ValidationError("env_step: action length must be 2 n_s");
  const auto& net = ctx.config.network;
  const SlotState& slot = ctx.slots[static_cast<std::size_t>(state.t - 1)];
  const MappedAction mapped = map_action(action, net.power_budget, net.tau_energy);

  StepResult out;
  out.q = mapped.q;
  out.battery.resize(n);
  out.p.resize(n);
  VectorXd carried(n);
  for (int i = 0; i < n; ++i) {
    const double b = state.carried(i) + net.tau_energy * model.phi(slot.energy_gain(i) * mapped.q(i));
    const double spent = mapped.rho(i) * b;
    out.battery(i) = b;
    out.p(i) = spent / net.tau_info;
    carried(i) = b - spent;
  }
  const double err = distortion(make_distortion_input(slot, ctx.field.at(state.t), net.noise_variance, out.p));
  out.reward = -err;
  out.next.t = state.t + 1;
  out.next.carried = std::move(carried);
  out.next.last_reward = out.reward;
  out.observation = observe(ctx, out.next);
  return out;
}

}  // namespace wpt
