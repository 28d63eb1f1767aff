#ifndef WPT_BENCH_HPP_
#define WPT_BENCH_HPP_

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wpt/allocate.hpp"
#include "wpt/trpo.hpp"

namespace wpt {

enum class SolverKind { Opt, Rl };

/// `S-AM-RM`: solver, assumed harvest model, realized harvest model.
struct ScenarioLabel {
  SolverKind solver = SolverKind::Opt;
  EhVariant assumed = EhVariant::Linear;
  EhVariant realized = EhVariant::Linear;

  std::string str() const;
  bool operator==(const ScenarioLabel&) const = default;
};

// Throws ValidationError on anything other than (OPT|RL)-(L|Q|S)-(L|Q|S), and on OPT-S-*.
ScenarioLabel parse_label(std::string_view text);

struct ExperimentResult {
  ScenarioLabel label;
  double budget = 0.0;                 // P_B, W
  double normalized_distortion = 0.0;  // err / P_x
  int realizations = 0;
  double std_error = 0.0;
};

// P_x = sum_t tr K_t over the horizon.
double signal_power(const ScenarioConfig& config, const FieldStatistics& field);

struct SweepOptions {
  int realizations = 1;  // fading draws per point; forced to 1 under deterministic fading
  TrainOptions training;
  // RL agents are read from (and trained ones written to) rl-<AM>-<budget>.bin here, if set.
  std::optional<std::filesystem::path> checkpoint_dir;
  std::function<void(const ExperimentResult&)> progress;
};

/// One row per (budget, label), budgets outermost.
std::vector<ExperimentResult> sweep_budget(const ScenarioConfig& config, std::span<const double> budgets,
                                           std::span<const ScenarioLabel> labels, const SweepOptions& options);

struct StudyEntry {
  double mean = 0.0;       // normalized distortion
  double std_error = 0.0;
};

struct FadingStudy {
  EhVariant variant = EhVariant::Linear;
  int realizations = 0;
  StudyEntry full_csi;      // solve_convex on each realized horizon
  StudyEntry mean_channel;  // |Z| = 1 plan replayed on each realized horizon
  StudyEntry rl;            // greedy policy on each realized horizon

  bool ordering_holds() const { return full_csi.mean < rl.mean && rl.mean < mean_channel.mean; }
};

// Realizations 0..n-1 of the config's fading law, shared by all three arms.
FadingStudy fading_study(const ScenarioConfig& config, const FieldStatistics& field, EhVariant variant,
                         int n_realizations, const Agent& agent);

struct PowerProfile {
  AllocationPlan plan;
  double periodicity = 0.0;
};

// Max over nodes and slots t, t + period in [1 + period, T - period] of the
// relative difference between p_t and p_{t+period}; tiny entries are measured
// against 1e-6 of the plan-wide peak.
double periodicity_score(const AllocationPlan& plan, int period);

// columns: t, i, p_watts
void write_power_profile(std::ostream& out, const AllocationPlan& plan);
// columns: t, i, p_watts, q_watts
void write_plan_csv(std::ostream& out, const AllocationPlan& plan);
// columns: episode, mean_distortion, kl, policy_entropy, time_slots
void write_curve_csv(std::ostream& out, std::span<const CurvePoint> curve);
// columns: label, budget_w, normalized_distortion, realizations, std_error
void write_sweep_csv(std::ostream& out, std::span<const ExperimentResult> rows);

}  // namespace wpt

#endif  // WPT_BENCH_HPP_
