#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>

#include "wpt/allocate.hpp"
#include "wpt/bench.hpp"
#include "wpt/channel.hpp"
#include "wpt/checkpoint.hpp"
#include "wpt/errors.hpp"
#include "wpt/harvest.hpp"
#include "wpt/scenario.hpp"
#include "wpt/trpo.hpp"
#include "wpt/units.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace wpt;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

struct Globals {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  bool paper_scale = false;
  bool no_solver_clamp = false;
  bool obs_include_phase = false;
};

ScenarioConfig load_config(const Globals& g) {
  ScenarioConfig config = g.scenario.empty() ? default_scenario() : load_scenario(g.scenario);
  if (g.seed) config.seed = *g.seed;
  if (g.paper_scale) {
    config.rl.policy_hidden = RlConfig::paper_policy_hidden();
    config.rl.value_hidden = RlConfig::paper_value_hidden();
  }
  if (g.no_solver_clamp) config.solver.clamp_quadratic = false;
  if (g.obs_include_phase) config.rl.obs_include_phase = true;
  config.validate();
  return config;
}

fs::path output_path(const Globals& g, const std::string& name) {
  const fs::path p(name);
  if (p.is_absolute()) return p;
  fs::create_directories(g.out_dir);
  return fs::path(g.out_dir) / p;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
  return out;
}

void write_json(const fs::path& path, const json& doc) {
  auto out = open_output(path);
  out << doc.dump(2) << '\n';
}

EhVariant variant_or_active(const std::string& text, const ScenarioConfig& config) {
  return text.empty() ? config.harvest.active : parse_variant(text);
}

void dump_channels(const Globals& g, const std::string& name, std::span<const SlotState> slots) {
  if (name.empty()) return;
  auto out = open_output(output_path(g, name));
  write_channel_csv(out, slots);
}

std::vector<SlotState> horizon_for(const ScenarioConfig& config, const FieldStatistics& field, bool mean_channel,
                                   std::uint64_t realization) {
  return mean_channel ? mean_channel_horizon(config, field) : realize_horizon(config, field, realization);
}

json study_entry_json(const StudyEntry& e) { return {{"mean", e.mean}, {"std_error", e.std_error}}; }

TrainResult train_logged(const ScenarioConfig& config, const FieldStatistics& field, const EhModel& model,
                         long long episodes) {
  TrainOptions options = TrainOptions::from(config.rl);
  options.episodes = episodes;
  long long next_report = 0;
  return train(config, field, model, options, [&](const CurvePoint& p, const Agent&) {
    if (p.episode >= next_report || p.episode == episodes) {
      std::fprintf(stderr, "episode %lld  mean distortion %.6g  kl %.3g  entropy %.4g\n", p.episode,
                   p.mean_distortion, p.kl, p.policy_entropy);
      next_report = p.episode + std::max<long long>(episodes / 20, 1);
    }
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Beacon and sensor power allocation for wirelessly powered sensor networks"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--scenario", g.scenario, "Scenario JSON file (defaults apply when omitted)");
  app.add_option("--seed", g.seed, "Override the scenario seed");
  app.add_option("--out-dir", g.out_dir, "Directory for relative output paths")->capture_default_str();
  app.add_flag("--paper-scale", g.paper_scale, "Use the full-size policy and value networks");
  app.add_flag("--no-solver-clamp", g.no_solver_clamp, "Do not clamp the quadratic model inside the solver");
  app.add_flag("--obs-include-phase", g.obs_include_phase, "Append the covariance phase and slot position to RL observations");
  app.fallthrough();

  // optimize
  auto* optimize = app.add_subcommand("optimize", "Solve the offline convex benchmark and replay it");
  std::string opt_assumed = "L", opt_actual, opt_out = "plan.csv", opt_summary = "summary.json", opt_channels;
  bool opt_mean = false;
  std::uint64_t opt_realization = 0;
  optimize->add_option("--assumed", opt_assumed, "Harvest model the solver assumes (L|Q)")->capture_default_str();
  optimize->add_option("--actual", opt_actual, "Harvest model used for replay (L|Q|S); defaults to --assumed");
  optimize->add_option("--out", opt_out, "Plan CSV")->capture_default_str();
  optimize->add_option("--summary", opt_summary, "Summary JSON")->capture_default_str();
  optimize->add_option("--realization", opt_realization, "Fading realization index")->capture_default_str();
  optimize->add_flag("--mean-channel", opt_mean, "Use |Z| = 1 regardless of the fading law");
  optimize->add_option("--dump-channels", opt_channels, "Write realized gains per slot to this CSV");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train the TRPO agent");
  std::optional<long long> train_episodes;
  std::string train_model, train_out = "curve.csv", train_ckpt = "policy.bin";
  train_cmd->add_option("--episodes", train_episodes, "Training episodes (default: rl.episodes)");
  train_cmd->add_option("--model", train_model, "Harvest model of the environment (L|Q|S)");
  train_cmd->add_option("--out", train_out, "Learning curve CSV")->capture_default_str();
  train_cmd->add_option("--checkpoint", train_ckpt, "Checkpoint file")->capture_default_str();

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Greedy evaluation of a trained checkpoint");
  std::string eval_ckpt = "policy.bin", eval_model, eval_out = "evaluation.json";
  int eval_episodes = 100;
  std::uint64_t eval_first = 0;
  evaluate->add_option("--checkpoint", eval_ckpt, "Checkpoint file")->capture_default_str();
  evaluate->add_option("--model", eval_model, "Harvest model of the environment (L|Q|S)");
  evaluate->add_option("--episodes", eval_episodes, "Evaluation episodes")->capture_default_str();
  evaluate->add_option("--first-realization", eval_first, "First fading realization index")->capture_default_str();
  evaluate->add_option("--out", eval_out, "Evaluation JSON")->capture_default_str();

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Distortion versus beacon budget for a set of scenario labels");
  std::string sweep_budgets = "0.5,1,1.5,2,2.5,3", sweep_labels = "OPT-L-L,OPT-L-Q,OPT-Q-Q", sweep_out = "sweep.csv";
  std::string sweep_ckpt_dir;
  int sweep_realizations = 1;
  std::optional<long long> sweep_episodes;
  sweep->add_option("--budgets", sweep_budgets, "Comma separated budgets, units allowed")->capture_default_str();
  sweep->add_option("--labels", sweep_labels, "Comma separated S-AM-RM labels")->capture_default_str();
  sweep->add_option("--realizations", sweep_realizations, "Fading realizations per point")->capture_default_str();
  sweep->add_option("--episodes", sweep_episodes, "Training episodes for RL labels (default: rl.episodes)");
  sweep->add_option("--checkpoint-dir", sweep_ckpt_dir, "Reuse or store RL checkpoints here");
  sweep->add_option("--out", sweep_out, "Sweep CSV")->capture_default_str();

  // fading-study
  auto* fading = app.add_subcommand("fading-study", "Full-CSI optimum vs mean-channel plan vs RL under fading");
  std::string fad_model, fad_ckpt, fad_out = "fading_study.json";
  int fad_realizations = 100;
  std::optional<long long> fad_episodes;
  fading->add_option("--model", fad_model, "Harvest model (L|Q)");
  fading->add_option("--realizations", fad_realizations, "Fading realizations")->capture_default_str();
  fading->add_option("--checkpoint", fad_ckpt, "Trained agent; trains one when omitted");
  fading->add_option("--episodes", fad_episodes, "Training episodes when no checkpoint is given");
  fading->add_option("--out", fad_out, "Result JSON")->capture_default_str();

  // fit-eh
  auto* fit = app.add_subcommand("fit-eh", "Least-squares fit of a harvest model to calibration data");
  std::string fit_variant = "quadratic", fit_data, fit_out = "eh_fit.json";
  fit->add_option("--variant", fit_variant, "linear|quad|logistic")->capture_default_str();
  fit->add_option("--data", fit_data, "Calibration CSV (input_mw,output_mw); synthetic points when omitted");
  fit->add_option("--out", fit_out, "Fitted parameters JSON")->capture_default_str();

  // dump-profile
  auto* profile = app.add_subcommand("dump-profile", "Sensor power profile of the convex benchmark");
  std::string prof_assumed = "L", prof_out = "profile.csv", prof_summary = "profile.json", prof_channels;
  bool prof_faded = false;
  std::uint64_t prof_realization = 0;
  profile->add_option("--assumed", prof_assumed, "Harvest model the solver assumes (L|Q)")->capture_default_str();
  profile->add_option("--out", prof_out, "Profile CSV")->capture_default_str();
  profile->add_option("--summary", prof_summary, "Periodicity summary JSON")->capture_default_str();
  profile->add_flag("--faded", prof_faded, "Draw fading instead of using the mean channel");
  profile->add_option("--realization", prof_realization, "Fading realization index (with --faded)")->capture_default_str();
  profile->add_option("--dump-channels", prof_channels, "Write realized gains per slot to this CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (fit->parsed()) {
      const EhVariant variant = parse_variant(fit_variant);
      const std::vector<CalibrationSample> samples =
          fit_data.empty() ? synthetic_calibration() : read_calibration_csv(fit_data);
      const FitResult result = fit_model(variant, samples);
      ScenarioConfig holder = default_scenario();
      holder.harvest.active = variant;
      (variant == EhVariant::Linear      ? holder.harvest.linear
       : variant == EhVariant::Quadratic ? holder.harvest.quadratic
                                         : holder.harvest.logistic) = result.model;
      const std::string key(to_string(variant));
      json doc = {{"model", key},
                  {key, to_json(holder)["harvest"][key]},
                  {"residual_sum_squares_mw2", result.residual_sum_squares},
                  {"constrained", result.constrained},
                  {"iterations", result.iterations},
                  {"samples", samples.size()}};
      write_json(output_path(g, fit_out), doc);
      std::cout << doc.dump(2) << '\n';
      return 0;
    }

    const ScenarioConfig config = load_config(g);
    const FieldStatistics field = build_field(config);

    if (optimize->parsed()) {
      const EhVariant assumed = parse_variant(opt_assumed);
      const EhVariant actual = opt_actual.empty() ? assumed : parse_variant(opt_actual);
      const ScenarioLabel label = parse_label("OPT-" + std::string(1, label_letter(assumed)) + "-" +
                                              std::string(1, label_letter(actual)));
      const auto slots = horizon_for(config, field, opt_mean, opt_realization);
      dump_channels(g, opt_channels, slots);
      const AllocationPlan plan =
          solve_convex(config, slots, field, config.harvest.model(assumed), SolverOptions::from(config.solver));
      const PlanEvaluation replay = evaluate_plan(plan, config, slots, field, config.harvest.model(actual));
      const double scale = static_cast<double>(config.horizon()) / signal_power(config, field);
      {
        auto out = open_output(output_path(g, opt_out));
        write_plan_csv(out, plan);
      }
      json summary = {{"label", label.str()},
                      {"objective", plan.objective},
                      {"kkt_residual", plan.kkt_residual},
                      {"realized_distortion", replay.mean_distortion},
                      {"normalized_distortion", replay.mean_distortion * scale},
                      {"neutrality_slack", plan.neutrality_slack},
                      {"budget_slack", plan.budget_slack},
                      {"sign_slack", plan.sign_slack}};
      write_json(output_path(g, opt_summary), summary);
      std::cout << summary.dump(2) << '\n';
      return 0;
    }

    if (train_cmd->parsed()) {
      const EhModel& model = config.harvest.model(variant_or_active(train_model, config));
      const TrainResult result = train_logged(config, field, model, train_episodes.value_or(config.rl.episodes));
      {
        auto out = open_output(output_path(g, train_out));
        write_curve_csv(out, result.curve);
      }
      save_checkpoint(output_path(g, train_ckpt), result.agent);
      if (result.skipped_updates > 0)
        std::fprintf(stderr, "%d policy updates skipped after conjugate-gradient failure\n", result.skipped_updates);
      return 0;
    }

    if (evaluate->parsed()) {
      const Agent agent = load_checkpoint(fs::path(eval_ckpt));
      const EhVariant variant = variant_or_active(eval_model, config);
      const PolicyEvaluation ev =
          evaluate_policy(agent, config, field, config.harvest.model(variant), eval_episodes, eval_first);
      const double scale = static_cast<double>(config.horizon()) / signal_power(config, field);
      json doc = {{"model", std::string(to_string(variant))},
                  {"episodes", eval_episodes},
                  {"mean_distortion", ev.mean},
                  {"std_distortion", ev.std},
                  {"normalized_distortion", ev.mean * scale}};
      write_json(output_path(g, eval_out), doc);
      std::cout << doc.dump(2) << '\n';
      return 0;
    }

    if (sweep->parsed()) {
      const std::vector<double> budgets = parse_power_list(sweep_budgets);
      std::vector<ScenarioLabel> labels;
      std::string_view rest = sweep_labels;
      while (!rest.empty()) {
        const auto comma = rest.find(',');
        labels.push_back(parse_label(rest.substr(0, comma)));
        rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
      }
      SweepOptions options;
      options.realizations = sweep_realizations;
      options.training = TrainOptions::from(config.rl);
      if (sweep_episodes) options.training.episodes = *sweep_episodes;
      if (!sweep_ckpt_dir.empty()) {
        fs::create_directories(sweep_ckpt_dir);
        options.checkpoint_dir = fs::path(sweep_ckpt_dir);
      }
      options.progress = [](const ExperimentResult& r) {
        std::fprintf(stderr, "%-8s  P_B %-6s  err %.6g\n", r.label.str().c_str(), format_power(r.budget).c_str(),
                     r.normalized_distortion);
      };
      const auto rows = sweep_budget(config, budgets, labels, options);
      auto out = open_output(output_path(g, sweep_out));
      write_sweep_csv(out, rows);
      return 0;
    }

    if (fading->parsed()) {
      const EhVariant variant = variant_or_active(fad_model, config);
      Agent agent = fad_ckpt.empty() ? train_logged(config, field, config.harvest.model(variant),
                                                    fad_episodes.value_or(config.rl.episodes))
                                           .agent
                                     : load_checkpoint(fs::path(fad_ckpt));
      const FadingStudy study = fading_study(config, field, variant, fad_realizations, agent);
      json doc = {{"model", std::string(to_string(variant))},
                  {"realizations", study.realizations},
                  {"full_csi", study_entry_json(study.full_csi)},
                  {"rl", study_entry_json(study.rl)},
                  {"mean_channel", study_entry_json(study.mean_channel)},
                  {"ordering_holds", study.ordering_holds()}};
      write_json(output_path(g, fad_out), doc);
      std::cout << doc.dump(2) << '\n';
      return 0;
    }

    if (profile->parsed()) {
      const EhVariant assumed = parse_variant(prof_assumed);
      const auto slots = horizon_for(config, field, !prof_faded, prof_realization);
      dump_channels(g, prof_channels, slots);
      const AllocationPlan plan =
          solve_convex(config, slots, field, config.harvest.model(assumed), SolverOptions::from(config.solver));
      {
        auto out = open_output(output_path(g, prof_out));
        write_power_profile(out, plan);
      }
      json doc = {{"period", config.field.period},
                  {"periodicity_score", periodicity_score(plan, config.field.period)},
                  {"time_uniformity", check_time_uniformity(plan)},
                  {"rows", plan.horizon() * plan.n()}};
      write_json(output_path(g, prof_summary), doc);
      std::cout << doc.dump(2) << '\n';
      return 0;
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return 0;
}
