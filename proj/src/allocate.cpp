#include "wpt/allocate.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "wpt/errors.hpp"
#include "wpt/estimation.hpp"

namespace wpt {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Centering target on the scaled barrier gradient.
constexpr double kStationarityTolerance = 1e-9;
// Constraints with a scaled slack below this count as active in the KKT certificate.
constexpr double kActiveSlack = 1e-4;

void check_slots(const ScenarioConfig& config, std::span<const SlotState> slots) {
  if (static_cast<int>(slots.size()) != config.horizon()) {
    throw ValidationError("allocate: expected " + std::to_string(config.horizon()) + " slots, got " +
                          std::to_string(slots.size()));
  }
  for (const auto& s : slots) {
    if (s.energy_gain.size() != config.n() || s.info_gain.size() != config.n()) {
      throw ValidationError("allocate: slot dimension does not match n_sensors");
    }
  }
}

using HarvestFn = std::function<double(double)>;

// Replay rule shared by evaluate_plan and the solver's final top-up.
MatrixXd replay(const MatrixXd& p, const MatrixXd& q, const ScenarioConfig& config,
                std::span<const SlotState> slots, const HarvestFn& phi) {
  const int horizon = static_cast<int>(p.rows());
  const int n = static_cast<int>(p.cols());
  const double tau_i = config.network.tau_info;
  const double tau_e = config.network.tau_energy;
  MatrixXd out(horizon, n);
  for (int i = 0; i < n; ++i) {
    double battery = 0.0;  // energy, J (normalized)
    for (int t = 0; t < horizon; ++t) {
      battery += tau_e * phi(q(t, i) * slots[t].energy_gain(i));
      const double wanted = tau_i * p(t, i);
      const double spent = (t == horizon - 1) ? battery : std::min(wanted, battery);
      out(t, i) = std::max(spent, 0.0) / tau_i;
      battery = std::max(battery - spent, 0.0);
    }
  }
  return out;
}

// Lawson-Hanson: argmin |a x - b| over x >= 0, started from a feasible x.
VectorXd nonnegative_least_squares(const MatrixXd& a, const VectorXd& b, VectorXd x) {
  const auto n = a.cols();
  std::vector<bool> passive(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) passive[static_cast<std::size_t>(j)] = x(j) > 0.0;
  const double tol = 1e-12 * std::max(1.0, (a.transpose() * b).cwiseAbs().maxCoeff());
  for (Eigen::Index outer = 0; outer <= 3 * n; ++outer) {
    for (Eigen::Index inner = 0; inner <= n; ++inner) {
      std::vector<Eigen::Index> idx;
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
      VectorXd s = VectorXd::Zero(n);
      if (!idx.empty()) {
        MatrixXd sub(a.rows(), static_cast<Eigen::Index>(idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = a.col(idx[k]);
        const VectorXd sol = sub.colPivHouseholderQr().solve(b);
        for (std::size_t k = 0; k < idx.size(); ++k) s(idx[k]) = sol(static_cast<Eigen::Index>(k));
      }
      double alpha = 1.0;
      for (Eigen::Index j : idx) {
        if (s(j) <= 0.0) alpha = std::min(alpha, x(j) / (x(j) - s(j)));
      }
      if (alpha >= 1.0) {
        x = s;
        break;
      }
      x += alpha * (s - x);
      for (Eigen::Index j : idx) {
        if (x(j) <= tol) {
          x(j) = 0.0;
          passive[static_cast<std::size_t>(j)] = false;
        }
      }
    }
    const VectorXd w = a.transpose() * (b - a * x);
    Eigen::Index best = -1;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!passive[static_cast<std::size_t>(j)] && w(j) > tol && (best < 0 || w(j) > w(best))) best = j;
    }
    if (best < 0) break;
    passive[static_cast<std::size_t>(best)] = true;
  }
  return x;
}

/// Log-barrier formulation in scaled variables z = (p / p_scale, q / P_B).
class BarrierProblem {
 public:
  BarrierProblem(const ScenarioConfig& config, std::span<const SlotState> slots, const FieldStatistics& field,
                 const EhModel& model, bool clamp)
      : config_(config), slots_(slots), model_(model), clamp_(clamp), horizon_(config.horizon()), n_(config.n()) {
    tau_i_ = config.network.tau_info;
    tau_e_ = config.network.tau_energy;
    budget_ = config.network.power_budget;
    inputs_.reserve(horizon_);
    for (int t = 0; t < horizon_; ++t) {
      inputs_.push_back(make_distortion_input(slots[t], field.at(slots[t].t), config.network.noise_variance,
                                              VectorXd::Zero(n_)));
    }
    p_scale_ = 0.0;
    for (int t = 0; t < horizon_; ++t) {
      for (int i = 0; i < n_; ++i) {
        p_scale_ = std::max(p_scale_, tau_e_ * harvest(budget_ * slots[t].energy_gain(i)) / tau_i_);
      }
    }
    if (!(p_scale_ > 0.0)) throw ValidationError("solve_convex: no node can harvest any energy");
  }

  int dim() const { return 2 * horizon_ * n_; }
  int constraint_count() const { return 2 * horizon_ * n_ + horizon_ + horizon_ * n_; }
  int ip(int t, int i) const { return t * n_ + i; }
  int iq(int t, int i) const { return horizon_ * n_ + t * n_ + i; }
  double p_scale() const { return p_scale_; }
  double budget() const { return budget_; }

  double harvest(double input) const { return model_.concave_value(input, clamp_); }

  VectorXd initial_point() const {
    VectorXd z(dim());
    const double zq = 0.99 / (n_ * tau_e_);
    for (int t = 0; t < horizon_; ++t) {
      for (int i = 0; i < n_; ++i) {
        z(iq(t, i)) = zq;
        z(ip(t, i)) = 0.9 * tau_e_ * harvest(budget_ * zq * slots_[t].energy_gain(i)) / (tau_i_ * p_scale_);
      }
    }
    if (!feasible(z)) {
      throw ValidationError("solve_convex: no strictly feasible starting point (harvest is zero at the start)");
    }
    return z;
  }

  // c_{t,i} = tau_I sum_{l<=t} z_p - (tau_E / p_scale) sum_{l<=t} phi(h P_B z_q)
  MatrixXd neutrality(const VectorXd& z) const {
    MatrixXd c(horizon_, n_);
    for (int i = 0; i < n_; ++i) {
      double acc = 0.0;
      for (int t = 0; t < horizon_; ++t) {
        acc += tau_i_ * z(ip(t, i)) -
               tau_e_ * harvest(budget_ * z(iq(t, i)) * slots_[t].energy_gain(i)) / p_scale_;
        c(t, i) = acc;
      }
    }
    return c;
  }

  VectorXd budget_constraint(const VectorXd& z) const {
    VectorXd c(horizon_);
    for (int t = 0; t < horizon_; ++t) {
      double s = 0.0;
      for (int i = 0; i < n_; ++i) s += z(iq(t, i));
      c(t) = tau_e_ * s - 1.0;
    }
    return c;
  }

  bool feasible(const VectorXd& z) const {
    if (!(z.array() > 0.0).all()) return false;
    if (!(budget_constraint(z).array() < 0.0).all()) return false;
    return (neutrality(z).array() < 0.0).all();
  }

  double objective(const VectorXd& z) {
    double f = 0.0;
    for (int t = 0; t < horizon_; ++t) {
      auto& in = inputs_[t];
      for (int i = 0; i < n_; ++i) in.power(i) = p_scale_ * z(ip(t, i));
      f += distortion(in);
    }
    return f / horizon_;
  }

  double value(const VectorXd& z, double mu) {
    if (!feasible(z)) return kInf;
    double barrier = -z.array().log().sum();
    barrier -= (-budget_constraint(z).array()).log().sum();
    barrier -= (-neutrality(z).array()).log().sum();
    return objective(z) + mu * barrier;
  }

  void derivatives(const VectorXd& z, double mu, VectorXd& grad, MatrixXd& hess) {
    const int d = dim();
    grad.setZero(d);
    hess.setZero(d, d);

    // objective
    const double ps = p_scale_;
    for (int t = 0; t < horizon_; ++t) {
      auto& in = inputs_[t];
      for (int i = 0; i < n_; ++i) in.power(i) = ps * z(ip(t, i));
      const auto dd = distortion_derivatives(in, true);
      const int base = ip(t, 0);
      grad.segment(base, n_) += (ps / horizon_) * dd.gradient;
      hess.block(base, base, n_, n_) += (ps * ps / horizon_) * dd.hessian;
    }

    // positivity
    for (int k = 0; k < d; ++k) {
      grad(k) -= mu / z(k);
      hess(k, k) += mu / (z(k) * z(k));
    }

    // per-slot budget
    const VectorXd cb = budget_constraint(z);
    for (int t = 0; t < horizon_; ++t) {
      const double inv = 1.0 / (-cb(t));
      const int base = iq(t, 0);
      grad.segment(base, n_).array() += mu * tau_e_ * inv;
      hess.block(base, base, n_, n_).array() += mu * tau_e_ * tau_e_ * inv * inv;
    }

    // energy neutrality: suffix sums over t >= l of mu / c^2 and mu / (-c)
    const MatrixXd cn = neutrality(z);
    VectorXd a(horizon_), beta(horizon_), w(horizon_), s(horizon_);
    for (int i = 0; i < n_; ++i) {
      double wacc = 0.0, sacc = 0.0;
      for (int t = horizon_ - 1; t >= 0; --t) {
        const double c = cn(t, i);
        wacc += mu / (c * c);
        sacc += mu / (-c);
        w(t) = wacc;
        s(t) = sacc;
        const double scale = slots_[t].energy_gain(i) * budget_;
        const double x = scale * z(iq(t, i));
        a(t) = tau_e_ / ps * scale * model_.concave_slope(x, clamp_);
        beta(t) = -tau_e_ / ps * scale * scale * model_.concave_curvature(x, clamp_);
      }
      for (int l = 0; l < horizon_; ++l) {
        grad(ip(l, i)) += tau_i_ * s(l);
        grad(iq(l, i)) -= a(l) * s(l);
        hess(iq(l, i), iq(l, i)) += beta(l) * s(l);
        for (int m = 0; m < horizon_; ++m) {
          const double wm = w(std::max(l, m));
          hess(ip(l, i), ip(m, i)) += tau_i_ * tau_i_ * wm;
          hess(ip(l, i), iq(m, i)) -= tau_i_ * a(m) * wm;
          hess(iq(m, i), ip(l, i)) -= tau_i_ * a(m) * wm;
          hess(iq(l, i), iq(m, i)) += a(l) * a(m) * wm;
        }
      }
    }
  }

  // Max of Lagrangian stationarity and complementarity, with nonnegative multipliers fitted by least squares
  // on the constraints whose slack is below active_slack. Rounding in tiny slacks makes the
  // barrier gradient a poor certificate once the barrier is far below the slacks' precision.
  double kkt_residual(const VectorXd& z, double mu, double active_slack) {
    const int d = dim();
    VectorXd grad;
    MatrixXd hess;
    derivatives(z, 0.0, grad, hess);

    std::vector<VectorXd> rows;
    std::vector<double> slack;
    auto add = [&](VectorXd row, double s) {
      if (s <= active_slack) {
        rows.push_back(std::move(row));
        slack.push_back(s);
      }
    };
    for (int k = 0; k < d; ++k) {
      VectorXd row = VectorXd::Zero(d);
      row(k) = -1.0;
      add(std::move(row), z(k));
    }
    const VectorXd cb = budget_constraint(z);
    for (int t = 0; t < horizon_; ++t) {
      VectorXd row = VectorXd::Zero(d);
      row.segment(iq(t, 0), n_).setConstant(tau_e_);
      add(std::move(row), -cb(t));
    }
    const MatrixXd cn = neutrality(z);
    for (int i = 0; i < n_; ++i) {
      for (int t = 0; t < horizon_; ++t) {
        if (-cn(t, i) > active_slack) continue;
        VectorXd row = VectorXd::Zero(d);
        for (int l = 0; l <= t; ++l) {
          const double scale = slots_[l].energy_gain(i) * budget_;
          row(ip(l, i)) = tau_i_;
          row(iq(l, i)) = -tau_e_ / p_scale_ * scale * model_.concave_slope(scale * z(iq(l, i)), clamp_);
        }
        add(std::move(row), -cn(t, i));
      }
    }
    if (rows.empty()) return grad.cwiseAbs().maxCoeff();

    MatrixXd jt(d, static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) jt.col(static_cast<Eigen::Index>(k)) = rows[k];
    VectorXd start(static_cast<Eigen::Index>(slack.size()));
    for (std::size_t k = 0; k < slack.size(); ++k) start(static_cast<Eigen::Index>(k)) = mu / slack[k];
    const VectorXd lambda = nonnegative_least_squares(jt, -grad, start);
    double residual = (grad + jt * lambda).cwiseAbs().maxCoeff();
    for (std::size_t k = 0; k < slack.size(); ++k) residual = std::max(residual, lambda(static_cast<Eigen::Index>(k)) * slack[k]);
    return residual;
  }

  MatrixXd unscale_p(const VectorXd& z) const {
    MatrixXd p(horizon_, n_);
    for (int t = 0; t < horizon_; ++t)
      for (int i = 0; i < n_; ++i) p(t, i) = p_scale_ * z(ip(t, i));
    return p;
  }

  MatrixXd unscale_q(const VectorXd& z) const {
    MatrixXd q(horizon_, n_);
    for (int t = 0; t < horizon_; ++t)
      for (int i = 0; i < n_; ++i) q(t, i) = budget_ * z(iq(t, i));
    return q;
  }

 private:
  const ScenarioConfig& config_;
  std::span<const SlotState> slots_;
  const EhModel& model_;
  bool clamp_;
  int horizon_;
  int n_;
  double tau_i_ = 1.0;
  double tau_e_ = 1.0;
  double budget_ = 0.0;
  double p_scale_ = 0.0;
  std::vector<DistortionInput> inputs_;
};

}  // namespace

double mean_distortion(const MatrixXd& p, const ScenarioConfig& config, std::span<const SlotState> slots,
                       const FieldStatistics& field) {
  double total = 0.0;
  for (int t = 0; t < static_cast<int>(p.rows()); ++t) {
    const auto in = make_distortion_input(slots[t], field.at(slots[t].t), config.network.noise_variance,
                                          p.row(t).transpose());
    total += distortion(in);
  }
  return total / static_cast<double>(p.rows());
}

void certify(AllocationPlan& plan, const ScenarioConfig& config, std::span<const SlotState> slots,
             const EhModel& model) {
  const double tau_i = config.network.tau_info;
  const double tau_e = config.network.tau_energy;
  plan.sign_slack = std::min(plan.p.minCoeff(), plan.q.minCoeff());
  plan.budget_slack = kInf;
  for (int t = 0; t < plan.horizon(); ++t) {
    plan.budget_slack = std::min(plan.budget_slack, config.network.power_budget - tau_e * plan.q.row(t).sum());
  }
  plan.neutrality_slack = kInf;
  for (int i = 0; i < plan.n(); ++i) {
    double harvested = 0.0, spent = 0.0;
    for (int t = 0; t < plan.horizon(); ++t) {
      harvested += tau_e * model.phi(std::max(plan.q(t, i), 0.0) * slots[t].energy_gain(i));
      spent += tau_i * plan.p(t, i);
      plan.neutrality_slack = std::min(plan.neutrality_slack, harvested - spent);
    }
  }
}

bool is_feasible(const AllocationPlan& plan) {
  return plan.sign_slack >= -kFeasibilityTolerance && plan.budget_slack >= -kFeasibilityTolerance &&
         plan.neutrality_slack >= -kFeasibilityTolerance;
}

AllocationPlan solve_convex(const ScenarioConfig& config, std::span<const SlotState> slots,
                            const FieldStatistics& field, const EhModel& model, const SolverOptions& options) {
  if (!model.is_concave()) {
    throw ValidationError(
        "solve_convex: the logistic harvest model makes the problem non-convex; use the RL agent (wpt train) "
        "for S models");
  }
  check_slots(config, slots);
  BarrierProblem problem(config, slots, field, model, options.clamp_quadratic);
  const int m = problem.constraint_count();

  VectorXd z = problem.initial_point();
  VectorXd grad, step;
  MatrixXd hess;
  double mu = options.initial_barrier;
  double stationarity = kInf;
  int stage = 0;
  for (;; ++stage) {
    // Stages past final_barrier are best effort: a rounding stall keeps the previous center.
    const bool extension = mu < options.final_barrier * (1.0 - 1e-12);
    const VectorXd stage_start = z;
    bool stalled = false;
    double decrement = kInf;
    double previous_decrement = kInf;
    int it = 0;
    const int step_limit = extension ? std::min(options.max_newton_steps, 50) : options.max_newton_steps;
    for (; it < step_limit; ++it) {
      problem.derivatives(z, mu, grad, hess);
      Eigen::LLT<MatrixXd> llt(hess);
      if (llt.info() != Eigen::Success) {
        MatrixXd jittered = hess;
        jittered.diagonal().array() += 1e-12 * hess.diagonal().cwiseAbs().maxCoeff();
        llt.compute(jittered);
        if (llt.info() != Eigen::Success) {
          throw NumericalError("solve_convex: barrier Hessian not positive definite at stage " +
                               std::to_string(stage));
        }
      }
      step = -llt.solve(grad);
      decrement = -grad.dot(step);
      const double f_now = problem.value(z, mu);
      const double centering = 0.5 * decrement;
      if (grad.cwiseAbs().maxCoeff() <= kStationarityTolerance || centering <= 1e-12 * mu * m) break;
      // rounding floor: the decrement has stopped shrinking well inside the barrier gap
      if (centering <= 1e-6 * mu * m && decrement > 0.5 * previous_decrement) break;
      previous_decrement = decrement;

      double s = 1.0;
      while (!problem.feasible(z + s * step) && s > 1e-16) s *= 0.5;
      bool moved = false;
      while (s > 1e-16) {
        const double f_try = problem.value(z + s * step, mu);
        if (f_try <= f_now - 0.25 * s * decrement) {
          moved = true;
          break;
        }
        s *= 0.5;
      }
      if (!moved) {
        // Line search exhausted by rounding; accept only if already near the center.
        if (decrement * 0.5 <= 1e-6 * (mu * m + 1e-12)) break;
        if (extension) {
          stalled = true;
          break;
        }
        throw NumericalError("solve_convex: Newton stalled at stage " + std::to_string(stage) +
                             " (barrier " + std::to_string(mu) + ", decrement " + std::to_string(decrement) + ")");
      }
      z += s * step;
    }
    if (!stalled && it == step_limit) stalled = extension;
    if (stalled) {
      z = stage_start;
      mu *= 10.0;
      problem.derivatives(z, mu, grad, hess);
      stationarity = grad.cwiseAbs().maxCoeff();
      break;
    }
    if (it == options.max_newton_steps) {
      throw NumericalError("solve_convex: Newton did not converge at stage " + std::to_string(stage) +
                           " (decrement " + std::to_string(decrement) + ")");
    }
    problem.derivatives(z, mu, grad, hess);
    stationarity = grad.cwiseAbs().maxCoeff();
    const double f = problem.objective(z);
    if (mu <= options.final_barrier * (1.0 + 1e-12) && m * mu <= options.gap_tolerance * std::max(f, 1e-300)) break;
    if (mu < 1e-300) break;
    mu *= 0.1;
  }

  AllocationPlan plan;
  plan.q = problem.unscale_q(z);
  const MatrixXd p = problem.unscale_p(z);
  plan.p = replay(p, plan.q, config, slots, [&](double x) { return problem.harvest(x); });
  plan.kkt_residual = std::min(std::max(stationarity, mu), problem.kkt_residual(z, mu, kActiveSlack));
  plan.objective = mean_distortion(plan.p, config, slots, field);
  certify(plan, config, slots, model);
  return plan;
}

AllocationPlan solve_convex(const ScenarioConfig& config, std::span<const SlotState> slots,
                            const FieldStatistics& field, const EhModel& model) {
  return solve_convex(config, slots, field, model, SolverOptions::from(config.solver));
}

namespace {

struct WaterFill {
  double multiplier = 0.0;
  VectorXd p;
};

WaterFill water_fill(const ScenarioConfig& config, const VectorXd& info_gain, const VectorXd& energy_gain,
                     const VectorXd& signal_variance, const EhModel& model) {
  const auto* lin = model.as_linear();
  if (!lin) throw ValidationError("closed_form_linear: requires the linear harvest model");
  const auto n = info_gain.size();
  if (energy_gain.size() != n || signal_variance.size() != n) {
    throw ValidationError("closed_form_linear: dimension mismatch");
  }
  const double zeta = lin->zeta;
  const double noise = config.network.noise_variance;
  // tau_I p = tau_E zeta h q and tau_E sum q <= P_B  =>  sum p / (zeta h) <= P_B / tau_I
  const double target = config.network.power_budget / config.network.tau_info;
  auto powers = [&](double kappa) {
    VectorXd p(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double g2 = info_gain(i);
      p(i) = std::max(0.0, std::sqrt(energy_gain(i) * zeta * signal_variance(i) * noise / (kappa * g2)) - noise / g2);
    }
    return p;
  };
  auto spend = [&](double kappa) {
    const VectorXd p = powers(kappa);
    return (p.array() / (zeta * energy_gain.array())).sum();
  };
  double lo = std::log(1e-20), hi = std::log(1e20);
  while (spend(std::exp(lo)) < target) lo -= 10.0;
  while (spend(std::exp(hi)) > target) hi += 10.0;
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 400; ++it) {
    mid = 0.5 * (lo + hi);
    const double sm = spend(std::exp(mid));
    if (std::abs(sm - target) <= 1e-10 * target) break;
    if (sm > target) lo = mid; else hi = mid;
  }
  return {std::exp(mid), powers(std::exp(mid))};
}

}  // namespace

double closed_form_multiplier(const ScenarioConfig& config, const VectorXd& info_gain, const VectorXd& energy_gain,
                              const VectorXd& signal_variance, const EhModel& model) {
  return water_fill(config, info_gain, energy_gain, signal_variance, model).multiplier;
}

AllocationPlan closed_form_linear(const ScenarioConfig& config, const VectorXd& info_gain,
                                  const VectorXd& energy_gain, const VectorXd& signal_variance,
                                  const EhModel& model) {
  const auto wf = water_fill(config, info_gain, energy_gain, signal_variance, model);
  const double zeta = model.as_linear()->zeta;
  const int horizon = config.horizon();
  const auto n = info_gain.size();
  VectorXd q(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    q(i) = config.network.tau_info * wf.p(i) / (config.network.tau_energy * zeta * energy_gain(i));
  }
  AllocationPlan plan;
  plan.p = wf.p.transpose().replicate(horizon, 1);
  plan.q = q.transpose().replicate(horizon, 1);
  plan.objective = diagonal_distortion(info_gain, signal_variance, config.network.noise_variance, wf.p);
  plan.kkt_residual = 0.0;
  plan.sign_slack = std::min(plan.p.minCoeff(), plan.q.minCoeff());
  plan.budget_slack = config.network.power_budget - config.network.tau_energy * q.sum();
  plan.neutrality_slack = 0.0;
  return plan;
}

double check_time_uniformity(const AllocationPlan& plan) {
  auto variation = [](const MatrixXd& m) {
    const double floor = 1e-6 * m.cwiseAbs().maxCoeff();
    double worst = 0.0;
    for (Eigen::Index i = 0; i < m.cols(); ++i) {
      const double hi = m.col(i).maxCoeff();
      const double lo = m.col(i).minCoeff();
      const double ref = std::max(std::abs(hi), floor);
      if (ref > 0.0) worst = std::max(worst, (hi - lo) / ref);
    }
    return worst;
  };
  return std::max(variation(plan.p), variation(plan.q));
}

PlanEvaluation evaluate_plan(const AllocationPlan& plan, const ScenarioConfig& config,
                             std::span<const SlotState> slots, const FieldStatistics& field,
                             const EhModel& actual_model) {
  check_slots(config, slots);
  PlanEvaluation out;
  out.repaired.q = plan.q;
  out.repaired.p = replay(plan.p, plan.q, config, slots, [&](double x) { return actual_model.phi(x); });
  out.mean_distortion = mean_distortion(out.repaired.p, config, slots, field);
  out.repaired.objective = out.mean_distortion;
  certify(out.repaired, config, slots, actual_model);
  return out;
}

}  // namespace wpt
