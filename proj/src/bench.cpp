#include "wpt/bench.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

#include "wpt/checkpoint.hpp"
#include "wpt/csv.hpp"
#include "wpt/errors.hpp"

namespace wpt {

namespace {

EhVariant variant_from_letter(char c, std::string_view text) {
  switch (c) {
    case 'L': return EhVariant::Linear;
    case 'Q': return EhVariant::Quadratic;
    case 'S': return EhVariant::Logistic;
    default: throw ValidationError("unknown label '" + std::string(text) + "'");
  }
}

StudyEntry summarize(const std::vector<double>& values) {
  StudyEntry e;
  const double n = static_cast<double>(values.size());
  for (double v : values) e.mean += v;
  e.mean /= n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - e.mean) * (v - e.mean);
    e.std_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return e;
}

}  // namespace

std::string ScenarioLabel::str() const {
  std::string s = solver == SolverKind::Opt ? "OPT-" : "RL-";
  s += label_letter(assumed);
  s += '-';
  s += label_letter(realized);
  return s;
}

ScenarioLabel parse_label(std::string_view text) {
  ScenarioLabel label;
  std::string_view rest;
  if (text.starts_with("OPT-")) {
    label.solver = SolverKind::Opt;
    rest = text.substr(4);
  } else if (text.starts_with("RL-")) {
    label.solver = SolverKind::Rl;
    rest = text.substr(3);
  } else {
    throw ValidationError("unknown label '" + std::string(text) + "'");
  }
  if (rest.size() != 3 || rest[1] != '-') throw ValidationError("unknown label '" + std::string(text) + "'");
  label.assumed = variant_from_letter(rest[0], text);
  label.realized = variant_from_letter(rest[2], text);
  if (label.solver == SolverKind::Opt && label.assumed == EhVariant::Logistic)
    throw ValidationError("label '" + std::string(text) + "': the convex benchmark cannot assume the logistic model");
  return label;
}

double signal_power(const ScenarioConfig& config, const FieldStatistics& field) {
  double total = 0.0;
  for (int t = 1; t <= config.horizon(); ++t) total += field.at(t).eigenvalues.sum();
  return total;
}

std::vector<ExperimentResult> sweep_budget(const ScenarioConfig& config, std::span<const double> budgets,
                                           std::span<const ScenarioLabel> labels, const SweepOptions& options) {
  if (options.realizations < 1) throw ValidationError("sweep: realizations must be at least 1");
  const FieldStatistics field = build_field(config);
  const double scale = static_cast<double>(config.horizon()) / signal_power(config, field);
  const int n_real = config.channel.deterministic_fading ? 1 : options.realizations;

  std::vector<ExperimentResult> rows;
  for (double budget : budgets) {
    if (!(budget > 0.0)) throw ValidationError("sweep: budgets must be positive");
    ScenarioConfig cfg = config;
    cfg.network.power_budget = budget;
    cfg.validate();

    std::vector<std::vector<SlotState>> horizons;
    for (int r = 0; r < n_real; ++r) horizons.push_back(realize_horizon(cfg, field, static_cast<std::uint64_t>(r)));
    std::map<EhVariant, std::vector<AllocationPlan>> plans;
    std::map<EhVariant, Agent> agents;

    for (const ScenarioLabel& label : labels) {
      const EhModel& realized = cfg.harvest.model(label.realized);
      std::vector<double> values;
      if (label.solver == SolverKind::Opt) {
        if (label.assumed == EhVariant::Logistic)
          throw ValidationError("label '" + label.str() + "': the convex benchmark cannot assume the logistic model");
        auto& cached = plans[label.assumed];
        if (cached.empty()) {
          for (const auto& slots : horizons)
            cached.push_back(solve_convex(cfg, slots, field, cfg.harvest.model(label.assumed),
                                          SolverOptions::from(cfg.solver)));
        }
        for (int r = 0; r < n_real; ++r) {
          const auto& slots = horizons[static_cast<std::size_t>(r)];
          values.push_back(evaluate_plan(cached[static_cast<std::size_t>(r)], cfg, slots, field, realized)
                               .mean_distortion * scale);
        }
      } else {
        auto it = agents.find(label.assumed);
        if (it == agents.end()) {
          std::optional<std::filesystem::path> path;
          if (options.checkpoint_dir) {
            path = *options.checkpoint_dir /
                   ("rl-" + std::string(1, label_letter(label.assumed)) + "-" + format_number(budget) + ".bin");
          }
          Agent agent;
          if (path && std::filesystem::exists(*path)) {
            agent = load_checkpoint(*path);
          } else {
            agent = train(cfg, field, cfg.harvest.model(label.assumed), options.training).agent;
            if (path) save_checkpoint(*path, agent);
          }
          it = agents.emplace(label.assumed, std::move(agent)).first;
        }
        const PolicyEvaluation ev = evaluate_policy(it->second, cfg, field, realized, n_real, 0);
        for (double v : ev.per_episode) values.push_back(v * scale);
      }
      const StudyEntry summary = summarize(values);
      ExperimentResult row{label, budget, summary.mean, n_real, summary.std_error};
      if (!(row.normalized_distortion >= 0.0 && row.normalized_distortion <= 1.0))
        throw NumericalError("sweep: normalized distortion outside [0, 1] for " + label.str());
      if (options.progress) options.progress(row);
      rows.push_back(row);
    }
  }
  return rows;
}

FadingStudy fading_study(const ScenarioConfig& config, const FieldStatistics& field, EhVariant variant,
                         int n_realizations, const Agent& agent) {
  if (n_realizations < 1) throw ValidationError("fading_study: n_realizations must be at least 1");
  const EhModel& model = config.harvest.model(variant);
  const SolverOptions solver = SolverOptions::from(config.solver);
  const double scale = static_cast<double>(config.horizon()) / signal_power(config, field);

  const std::vector<SlotState> mean_slots = mean_channel_horizon(config, field);
  const AllocationPlan mean_plan = solve_convex(config, mean_slots, field, model, solver);

  std::vector<double> full, replay;
  for (int r = 0; r < n_realizations; ++r) {
    const auto slots = realize_horizon(config, field, static_cast<std::uint64_t>(r));
    full.push_back(solve_convex(config, slots, field, model, solver).objective * scale);
    replay.push_back(evaluate_plan(mean_plan, config, slots, field, model).mean_distortion * scale);
  }
  const PolicyEvaluation ev = evaluate_policy(agent, config, field, model, n_realizations, 0);
  std::vector<double> rl;
  for (double v : ev.per_episode) rl.push_back(v * scale);

  FadingStudy study;
  study.variant = variant;
  study.realizations = n_realizations;
  study.full_csi = summarize(full);
  study.mean_channel = summarize(replay);
  study.rl = summarize(rl);
  return study;
}

double periodicity_score(const AllocationPlan& plan, int period) {
  if (period < 1) throw ValidationError("periodicity_score: period must be at least 1");
  const int T = plan.horizon();
  const double floor = 1e-6 * std::max(plan.p.maxCoeff(), 0.0);
  double score = 0.0;
  for (int i = 0; i < plan.n(); ++i) {
    for (int t = 1 + period; t + period <= T - period; ++t) {
      const double a = plan.p(t - 1, i), b = plan.p(t + period - 1, i);
      const double ref = std::max({std::abs(a), std::abs(b), floor});
      if (ref > 0.0) score = std::max(score, std::abs(a - b) / ref);
    }
  }
  return score;
}

void write_power_profile(std::ostream& out, const AllocationPlan& plan) {
  CsvWriter csv(out, {"t", "i", "p_watts"});
  for (int t = 0; t < plan.horizon(); ++t) {
    for (int i = 0; i < plan.n(); ++i) {
      csv.cell(t + 1).cell(i + 1).cell(plan.p(t, i));
      csv.end_row();
    }
  }
}

void write_plan_csv(std::ostream& out, const AllocationPlan& plan) {
  CsvWriter csv(out, {"t", "i", "p_watts", "q_watts"});
  for (int t = 0; t < plan.horizon(); ++t) {
    for (int i = 0; i < plan.n(); ++i) {
      csv.cell(t + 1).cell(i + 1).cell(plan.p(t, i)).cell(plan.q(t, i));
      csv.end_row();
    }
  }
}

void write_curve_csv(std::ostream& out, std::span<const CurvePoint> curve) {
  CsvWriter csv(out, {"episode", "mean_distortion", "kl", "policy_entropy", "time_slots"});
  for (const auto& p : curve) {
    csv.cell(p.episode).cell(p.mean_distortion).cell(p.kl).cell(p.policy_entropy).cell(p.time_slots);
    csv.end_row();
  }
}

void write_sweep_csv(std::ostream& out, std::span<const ExperimentResult> rows) {
  CsvWriter csv(out, {"label", "budget_w", "normalized_distortion", "realizations", "std_error"});
  for (const auto& r : rows) {
    csv.cell(r.label.str()).cell(r.budget).cell(r.normalized_distortion).cell(r.realizations).cell(r.std_error);
    csv.end_row();
  }
}

}  // namespace wpt
