#ifndef WPT_TRPO_HPP_
#define WPT_TRPO_HPP_

#include <Eigen/Dense>
#include <functional>
#include <iosfwd>
#include <vector>

#include "wpt/environment.hpp"
#include "wpt/mlp.hpp"

namespace wpt {

inline constexpr double kMinLogStd = -20.0;
inline constexpr double kMaxLogStd = 2.0;

/// Running mean and variance of observations (parallel Welford merge).
class RunningNormalizer {
 public:
  RunningNormalizer() = default;
  explicit RunningNormalizer(int size);
  RunningNormalizer(double count, Eigen::VectorXd mean, Eigen::VectorXd variance);

  // Columns are samples.
  void update(const Eigen::MatrixXd& batch);
  Eigen::VectorXd normalize(const Eigen::VectorXd& x) const;

  double count() const { return count_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::VectorXd& variance() const { return var_; }

 private:
  double count_ = 0.0;
  Eigen::VectorXd mean_, var_;
};

/// Diagonal Gaussian over raw actions: mean from a network, one global log-std vector.
struct GaussianPolicy {
  Mlp mean;
  Eigen::VectorXd log_std;

  int parameter_count() const { return mean.parameter_count() + static_cast<int>(log_std.size()); }
  Eigen::VectorXd parameters() const;
  void set_parameters(const Eigen::VectorXd& flat);  // clamps log-std into [kMinLogStd, kMaxLogStd]
  double entropy() const;
};

struct Agent {
  int n_sensors = 0;
  int period = 1;
  bool include_phase = false;
  GaussianPolicy policy;
  Mlp value;
  RunningNormalizer normalizer;

  int observation_size() const { return wpt::observation_size(n_sensors, period, include_phase); }
  int action_size() const { return 2 * n_sensors; }
};

Agent make_agent(const ScenarioConfig& config, RandomStream& rng);

// sum_d [-(a - mu)^2 / (2 sigma^2) - log sigma - log(2 pi) / 2]
double gaussian_log_prob(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std, const Eigen::VectorXd& action);

// KL(old || new) between diagonal Gaussians.
double gaussian_kl(const Eigen::VectorXd& mean_old, const Eigen::VectorXd& log_std_old, const Eigen::VectorXd& mean_new,
                   const Eigen::VectorXd& log_std_new);

struct PolicySample {
  Eigen::VectorXd action;
  double log_prob = 0.0;
};

// `obs` is already normalized.
PolicySample policy_sample(const GaussianPolicy& policy, const Eigen::VectorXd& obs, RandomStream& rng);

struct TraceStep {
  Eigen::VectorXd observation;  // raw
  Eigen::VectorXd normalized;   // as fed to the networks
  Eigen::VectorXd action;       // raw
  Eigen::VectorXd q, p, battery;
  double reward = 0.0;
  double log_prob = 0.0;
};

struct EpisodeTrace {
  std::vector<TraceStep> steps;

  double discounted_return(double gamma) const;
  double mean_distortion() const;
};

// Greedy (policy mean) when rng is null.
EpisodeTrace run_episode(const Agent& agent, const EnvContext& ctx, const EhModel& model, RandomStream* rng);

struct CurvePoint {
  long long episode = 0;     // episodes completed
  long long time_slots = 0;  // slots completed
  double mean_distortion = 0.0;
  double kl = 0.0;
  double policy_entropy = 0.0;
  bool accepted = false;
};

struct TrainOptions {
  long long episodes = 0;
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

  static TrainOptions from(const RlConfig& rl);
};

struct TrainResult {
  Agent agent;
  std::vector<CurvePoint> curve;
  int skipped_updates = 0;
};

using ProgressCallback = std::function<void(const CurvePoint&, const Agent&)>;

/// TRPO with a learned value baseline. Each episode draws a fresh fading
/// realization (or the mean channel when fading is deterministic).
TrainResult train(const ScenarioConfig& config, const FieldStatistics& field, const EhModel& model,
                  const TrainOptions& options, const ProgressCallback& progress = {});
TrainResult train(const ScenarioConfig& config, const FieldStatistics& field, const EhModel& model, Agent agent,
                  const TrainOptions& options, const ProgressCallback& progress = {});

struct PolicyEvaluation {
  double mean = 0.0;
  double std = 0.0;
  std::vector<double> per_episode;  // mean distortion per slot
};

// Greedy rollouts on fading realizations first_realization, first_realization + 1, ...
PolicyEvaluation evaluate_policy(const Agent& agent, const ScenarioConfig& config, const FieldStatistics& field,
                                 const EhModel& model, int n_episodes, std::uint64_t first_realization = 0);

// Realization indices used for training episodes start here.
inline constexpr std::uint64_t kTrainingRealizationOffset = std::uint64_t{1} << 40;

}  // namespace wpt

#endif  // WPT_TRPO_HPP_
