#ifndef WPT_ALLOCATE_HPP_
#define WPT_ALLOCATE_HPP_

#include <Eigen/Dense>
#include <span>
#include <string>

#include "wpt/channel.hpp"
#include "wpt/field.hpp"
#include "wpt/harvest.hpp"
#include "wpt/scenario.hpp"

namespace wpt {

/// Sensor powers p and beacon allocations q over the horizon, one row per slot.
struct AllocationPlan {
  Eigen::MatrixXd p;  // T x n_s, W
  Eigen::MatrixXd q;  // T x n_s, W
  double objective = 0.0;     // mean distortion over T
  double kkt_residual = 0.0;  // max(stationarity, complementarity, violation); 0 for closed form
  // Feasibility certificate; each is >= -1e-9 for a feasible plan.
  double neutrality_slack = 0.0;  // min over (t, i) of cumulative harvest - cumulative spend
  double budget_slack = 0.0;      // min over t of P_B - sum_i tau_E q_t^i
  double sign_slack = 0.0;        // min entry of p and q

  int horizon() const { return static_cast<int>(p.rows()); }
  int n() const { return static_cast<int>(p.cols()); }
};

inline constexpr double kFeasibilityTolerance = 1e-9;

// Fills the three slack fields of `plan` against `model`.
void certify(AllocationPlan& plan, const ScenarioConfig& config, std::span<const SlotState> slots,
             const EhModel& model);
bool is_feasible(const AllocationPlan& plan);

// Mean over slots of the LMMSE distortion for the given T x n powers.
double mean_distortion(const Eigen::MatrixXd& p, const ScenarioConfig& config, std::span<const SlotState> slots,
                       const FieldStatistics& field);

struct SolverOptions {
  bool clamp_quadratic = true;
  double initial_barrier = 1.0;
  double final_barrier = 1e-9;
  double gap_tolerance = 1e-10;
  int max_newton_steps = 200;

  static SolverOptions from(const SolverConfig& c) {
    return {c.clamp_quadratic, c.initial_barrier, c.final_barrier, c.gap_tolerance, c.max_newton_steps};
  }
};

/// Offline benchmark: minimizes mean distortion over all T x n_s powers and
/// beacon allocations subject to energy neutrality, the per-slot beacon budget
/// and nonnegativity. Log-barrier interior point with a damped Newton inner loop.
///
/// Requires a concave harvest model (Linear, or Quadratic with a1 < 0).
/// Throws ValidationError for Logistic and NumericalError if Newton stalls.
AllocationPlan solve_convex(const ScenarioConfig& config, std::span<const SlotState> slots,
                            const FieldStatistics& field, const EhModel& model, const SolverOptions& options);
AllocationPlan solve_convex(const ScenarioConfig& config, std::span<const SlotState> slots,
                            const FieldStatistics& field, const EhModel& model);

// Water-filling optimum for time-invariant channels, diagonal covariance and a
// linear harvester. Inputs are per node; the plan repeats over config.horizon() slots.
AllocationPlan closed_form_linear(const ScenarioConfig& config, const Eigen::VectorXd& info_gain,
                                  const Eigen::VectorXd& energy_gain, const Eigen::VectorXd& signal_variance,
                                  const EhModel& model);

// The water level (budget multiplier) found by closed_form_linear.
double closed_form_multiplier(const ScenarioConfig& config, const Eigen::VectorXd& info_gain,
                              const Eigen::VectorXd& energy_gain, const Eigen::VectorXd& signal_variance,
                              const EhModel& model);

// Max over nodes of (max_t - min_t) / max_t for p and q; nodes whose peak is
// below 1e-6 of the plan-wide peak are measured against that floor.
double check_time_uniformity(const AllocationPlan& plan);

struct PlanEvaluation {
  double mean_distortion = 0.0;
  AllocationPlan repaired;
};

/// Replays a plan against the harvester actually present. A node that cannot
/// cover p_t^i transmits its whole battery; whatever is left after slot T-1 is
/// spent in slot T.
PlanEvaluation evaluate_plan(const AllocationPlan& plan, const ScenarioConfig& config,
                             std::span<const SlotState> slots, const FieldStatistics& field,
                             const EhModel& actual_model);

}  // namespace wpt

#endif  // WPT_ALLOCATE_HPP_
