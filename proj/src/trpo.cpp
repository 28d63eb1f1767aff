#include "wpt/trpo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "wpt/errors.hpp"

namespace wpt {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // log(2 pi) / 2

}  // namespace

RunningNormalizer::RunningNormalizer(int size) : mean_(VectorXd::Zero(size)), var_(VectorXd::Ones(size)) {}

RunningNormalizer::RunningNormalizer(double count, VectorXd mean, VectorXd variance)
    : count_(count), mean_(std::move(mean)), var_(std::move(variance)) {
  if (mean_.size() != var_.size()) throw ValidationError("normalizer: mean and variance sizes differ");
}

void RunningNormalizer::update(const MatrixXd& batch) {
  const double m = static_cast<double>(batch.cols());
  if (m == 0) return;
  const VectorXd batch_mean = batch.rowwise().mean();
  const VectorXd batch_var = (batch.colwise() - batch_mean).array().square().rowwise().mean();
  if (count_ == 0.0) {
    mean_ = batch_mean;
    var_ = batch_var;
    count_ = m;
    return;
  }
  const double total = count_ + m;
  const VectorXd delta = batch_mean - mean_;
  mean_ += delta * (m / total);
  var_ = (var_ * count_ + batch_var * m + delta.cwiseAbs2() * (count_ * m / total)) / total;
  count_ = total;
}

VectorXd RunningNormalizer::normalize(const VectorXd& x) const {
  return (x - mean_).cwiseQuotient((var_.array() + 1e-8).sqrt().matrix());
}

VectorXd GaussianPolicy::parameters() const {
  VectorXd flat(parameter_count());
  flat << mean.parameters(), log_std;
  return flat;
}

void GaussianPolicy::set_parameters(const VectorXd& flat) {
  if (flat.size() != parameter_count()) throw ValidationError("policy: parameter vector has the wrong length");
  const int k = mean.parameter_count();
  mean.set_parameters(flat.head(k));
  log_std = flat.tail(flat.size() - k).cwiseMax(kMinLogStd).cwiseMin(kMaxLogStd);
}

double GaussianPolicy::entropy() const {
  return log_std.sum() + static_cast<double>(log_std.size()) * (0.5 + kHalfLog2Pi);
}

Agent make_agent(const ScenarioConfig& config, RandomStream& rng) {
  Agent agent;
  agent.n_sensors = config.n();
  agent.period = config.field.period;
  agent.include_phase = config.rl.obs_include_phase;
  const int obs = agent.observation_size();
  agent.policy.mean = Mlp(obs, config.rl.policy_hidden, agent.action_size(), rng, 0.01);
  agent.policy.log_std = VectorXd::Constant(agent.action_size(), config.rl.initial_log_std);
  agent.value = Mlp(obs, config.rl.value_hidden, 1, rng);
  agent.normalizer = RunningNormalizer(obs);
  return agent;
}

double gaussian_log_prob(const VectorXd& mean, const VectorXd& log_std, const VectorXd& action) {
  const VectorXd z = (action - mean).cwiseQuotient(log_std.array().exp().matrix());
  return -0.5 * z.squaredNorm() - log_std.sum() - static_cast<double>(mean.size()) * kHalfLog2Pi;
}

double gaussian_kl(const VectorXd& mean_old, const VectorXd& log_std_old, const VectorXd& mean_new,
                   const VectorXd& log_std_new) {
  const auto var_old = (2.0 * log_std_old.array()).exp();
  const auto var_new = (2.0 * log_std_new.array()).exp();
  return (log_std_new.array() - log_std_old.array() +
          (var_old + (mean_old - mean_new).array().square()) / (2.0 * var_new) - 0.5)
      .sum();
}

PolicySample policy_sample(const GaussianPolicy& policy, const VectorXd& obs, RandomStream& rng) {
  if (!obs.allFinite()) throw NumericalError("policy_sample: non-finite observation");
  const VectorXd mu = policy.mean.forward_one(obs);
  std::normal_distribution<double> normal;
  VectorXd action(mu.size());
  for (Eigen::Index d = 0; d < mu.size(); ++d) action(d) = mu(d) + std::exp(policy.log_std(d)) * normal(rng);
  return {action, gaussian_log_prob(mu, policy.log_std, action)};
}

double EpisodeTrace::discounted_return(double gamma) const {
  double g = 0.0, w = 1.0;
  for (const auto& s : steps) {
    g += w * s.reward;
    w *= gamma;
  }
  return g;
}

double EpisodeTrace::mean_distortion() const {
  if (steps.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : steps) sum -= s.reward;
  return sum / static_cast<double>(steps.size());
}

EpisodeTrace run_episode(const Agent& agent, const EnvContext& ctx, const EhModel& model, RandomStream* rng) {
  EpisodeTrace trace;
  auto [state, obs] = env_reset(ctx);
  while (!state.done(ctx)) {
    TraceStep step;
    step.observation = obs;
    step.normalized = agent.normalizer.normalize(obs);
    if (rng) {
      PolicySample s = policy_sample(agent.policy, step.normalized, *rng);
      step.action = std::move(s.action);
      step.log_prob = s.log_prob;
    } else {
      step.action = agent.policy.mean.forward_one(step.normalized);
      step.log_prob = gaussian_log_prob(step.action, agent.policy.log_std, step.action);
    }
    StepResult r = env_step(ctx, state, step.action, model);
    step.q = std::move(r.q);
    step.p = std::move(r.p);
    step.battery = std::move(r.battery);
    step.reward = r.reward;
    trace.steps.push_back(std::move(step));
    state = std::move(r.next);
    obs = std::move(r.observation);
  }
  return trace;
}

TrainOptions TrainOptions::from(const RlConfig& rl) {
  TrainOptions o;
  o.episodes = rl.episodes;
  o.batch_episodes = rl.batch_episodes;
  o.gamma = rl.gamma;
  o.gae_lambda = rl.gae_lambda;
  o.kl_target = rl.kl_target;
  o.cg_iterations = rl.cg_iterations;
  o.cg_damping = rl.cg_damping;
  o.max_backtracks = rl.max_backtracks;
  o.value_learning_rate = rl.value_learning_rate;
  o.value_epochs = rl.value_epochs;
  o.value_minibatch = rl.value_minibatch;
  return o;
}

namespace {

struct Batch {
  MatrixXd raw;      // observations, one per column
  MatrixXd obs;      // normalized
  MatrixXd actions;
  VectorXd log_prob;
  VectorXd advantage;
  VectorXd target;   // discounted reward-to-go
  double mean_distortion = 0.0;
};

Batch assemble(const std::vector<EpisodeTrace>& traces, const Agent& agent, const TrainOptions& opt) {
  Eigen::Index total = 0;
  for (const auto& tr : traces) total += static_cast<Eigen::Index>(tr.steps.size());
  Batch b;
  b.raw.resize(agent.observation_size(), total);
  b.obs.resize(agent.observation_size(), total);
  b.actions.resize(agent.action_size(), total);
  b.log_prob.resize(total);
  b.advantage.resize(total);
  b.target.resize(total);
  Eigen::Index col = 0;
  for (const auto& tr : traces) {
    const auto len = static_cast<Eigen::Index>(tr.steps.size());
    for (Eigen::Index k = 0; k < len; ++k) {
      const auto& s = tr.steps[static_cast<std::size_t>(k)];
      b.raw.col(col + k) = s.observation;
      b.obs.col(col + k) = s.normalized;
      b.actions.col(col + k) = s.action;
      b.log_prob(col + k) = s.log_prob;
    }
    const VectorXd values = agent.value.forward(b.obs.middleCols(col, len)).row(0).transpose();
    double gae = 0.0, ret = 0.0;
    for (Eigen::Index k = len; k-- > 0;) {
      const double r = tr.steps[static_cast<std::size_t>(k)].reward;
      const double next_value = k + 1 < len ? values(k + 1) : 0.0;
      const double delta = r + opt.gamma * next_value - values(k);
      gae = delta + opt.gamma * opt.gae_lambda * gae;
      ret = r + opt.gamma * ret;
      b.advantage(col + k) = gae;
      b.target(col + k) = ret;
    }
    b.mean_distortion += tr.mean_distortion();
    col += len;
  }
  b.mean_distortion /= static_cast<double>(traces.size());
  const double mean = b.advantage.mean();
  const double sd = std::sqrt((b.advantage.array() - mean).square().mean());
  b.advantage = (b.advantage.array() - mean) / (sd + 1e-8);
  return b;
}

VectorXd batch_log_prob(const MatrixXd& mu, const VectorXd& log_std, const MatrixXd& actions) {
  VectorXd out(mu.cols());
  for (Eigen::Index c = 0; c < mu.cols(); ++c) out(c) = gaussian_log_prob(mu.col(c), log_std, actions.col(c));
  return out;
}

double mean_kl(const MatrixXd& mu_old, const VectorXd& ls_old, const MatrixXd& mu_new, const VectorXd& ls_new) {
  double sum = 0.0;
  for (Eigen::Index c = 0; c < mu_old.cols(); ++c) sum += gaussian_kl(mu_old.col(c), ls_old, mu_new.col(c), ls_new);
  return sum / static_cast<double>(mu_old.cols());
}

struct PolicyUpdate {
  bool accepted = false;
  bool cg_failed = false;
  double kl = 0.0;
};

PolicyUpdate update_policy(GaussianPolicy& policy, const Batch& b, const TrainOptions& opt) {
  const double n = static_cast<double>(b.obs.cols());
  const int nm = policy.mean.parameter_count();
  const int na = static_cast<int>(policy.log_std.size());
  Mlp::Cache cache;
  const MatrixXd mu = policy.mean.forward(b.obs, &cache);
  const VectorXd ls = policy.log_std;
  const VectorXd inv_var = (-2.0 * ls.array()).exp();
  const MatrixXd z = b.actions - mu;

  // Gradient of the surrogate mean(ratio * A) at the current parameters.
  MatrixXd g_mu = z.array().colwise() * inv_var.array();
  g_mu = g_mu.array().rowwise() * (b.advantage.transpose().array() / n);
  VectorXd g(nm + na);
  g.head(nm) = policy.mean.backward(cache, g_mu);
  MatrixXd sq = z.array().square().colwise() * inv_var.array() - 1.0;
  g.tail(na) = sq * b.advantage / n;

  auto fisher = [&](const VectorXd& v) {
    MatrixXd jv = policy.mean.jvp(cache, v.head(nm));
    jv = jv.array().colwise() * (inv_var.array() / n);
    VectorXd out(nm + na);
    out.head(nm) = policy.mean.backward(cache, jv);
    out.tail(na) = 2.0 * v.tail(na);
    return VectorXd(out + opt.cg_damping * v);
  };

  VectorXd x = VectorXd::Zero(g.size());
  VectorXd r = g, d = g;
  double rr = r.squaredNorm();
  for (int k = 0; k < opt.cg_iterations && rr > 1e-20; ++k) {
    const VectorXd fd = fisher(d);
    const double denom = d.dot(fd);
    if (!(denom > 0.0) || !std::isfinite(denom)) break;
    const double alpha = rr / denom;
    x += alpha * d;
    r -= alpha * fd;
    const double rr_new = r.squaredNorm();
    d = r + (rr_new / rr) * d;
    rr = rr_new;
  }
  PolicyUpdate result;
  const double shs = 0.5 * x.dot(fisher(x));
  if (!(shs > 0.0) || !std::isfinite(shs) || !x.allFinite()) {
    result.cg_failed = true;
    return result;
  }
  const VectorXd full = x * std::sqrt(opt.kl_target / shs);
  const VectorXd theta = policy.parameters();
  for (int k = 0; k <= opt.max_backtracks; ++k) {
    const double frac = std::ldexp(1.0, -k);
    policy.set_parameters(theta + frac * full);
    const MatrixXd mu_new = policy.mean.forward(b.obs);
    const double kl = mean_kl(mu, ls, mu_new, policy.log_std);
    const VectorXd ratio = (batch_log_prob(mu_new, policy.log_std, b.actions) - b.log_prob).array().exp();
    const double improvement = ratio.dot(b.advantage) / n;
    if (std::isfinite(kl) && kl <= opt.kl_target && improvement > 0.0) {
      result.accepted = true;
      result.kl = kl;
      return result;
    }
  }
  policy.set_parameters(theta);
  return result;
}

void update_value(Mlp& value, Adam& adam, const Batch& b, const TrainOptions& opt, RandomStream& rng) {
  const auto n = b.obs.cols();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  for (int epoch = 0; epoch < opt.value_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index start = 0; start < n; start += opt.value_minibatch) {
      const auto m = std::min<Eigen::Index>(opt.value_minibatch, n - start);
      MatrixXd x(b.obs.rows(), m);
      VectorXd y(m);
      for (Eigen::Index k = 0; k < m; ++k) {
        x.col(k) = b.obs.col(order[static_cast<std::size_t>(start + k)]);
        y(k) = b.target(order[static_cast<std::size_t>(start + k)]);
      }
      Mlp::Cache cache;
      const MatrixXd v = value.forward(x, &cache);
      const MatrixXd grad_out = (2.0 / static_cast<double>(m)) * (v.row(0).transpose() - y).transpose();
      value.set_parameters(value.parameters() + adam.step(value.backward(cache, grad_out)));
    }
  }
}

}  // namespace

TrainResult train(const ScenarioConfig& config, const FieldStatistics& field, const EhModel& model,
                  const TrainOptions& options, const ProgressCallback& progress) {
  RandomStream rng = rng_stream(config, "init", 0);
  return train(config, field, model, make_agent(config, rng), options, progress);
}

TrainResult train(const ScenarioConfig& config, const FieldStatistics& field, const EhModel& model, Agent agent,
                  const TrainOptions& options, const ProgressCallback& progress) {
  if (options.episodes < 0) throw ValidationError("train: episodes must be non-negative");
  if (options.batch_episodes < 1) throw ValidationError("rl.batch_episodes: must be at least 1");
  if (agent.n_sensors != config.n() || agent.observation_size() != agent.policy.mean.input_size())
    throw ValidationError("train: agent does not match the scenario");

  const bool deterministic = config.channel.deterministic_fading;
  const std::vector<SlotState> mean_slots = deterministic ? mean_channel_horizon(config, field)
                                                          : std::vector<SlotState>{};
  TrainResult result;
  Adam adam(agent.value.parameter_count(), options.value_learning_rate);
  long long done = 0, slots_done = 0;
  std::uint64_t iteration = 0;
  while (done < options.episodes) {
    const long long count = std::min<long long>(options.batch_episodes, options.episodes - done);
    std::vector<EpisodeTrace> traces;
    traces.reserve(static_cast<std::size_t>(count));
    for (long long e = 0; e < count; ++e) {
      const auto index = static_cast<std::uint64_t>(done + e);
      const std::vector<SlotState> slots =
          deterministic ? mean_slots : realize_horizon(config, field, kTrainingRealizationOffset + index);
      const EnvContext ctx{config, field, slots, agent.include_phase};
      RandomStream rng = rng_stream(config, "policy", index);
      traces.push_back(run_episode(agent, ctx, model, &rng));
      slots_done += static_cast<long long>(traces.back().steps.size());
    }
    const Batch batch = assemble(traces, agent, options);

    CurvePoint point;
    const PolicyUpdate update = update_policy(agent.policy, batch, options);
    if (update.cg_failed) ++result.skipped_updates;
    if (!agent.policy.mean.all_finite() || !agent.policy.log_std.allFinite()) {
      std::ostringstream msg;
      msg << "train: non-finite policy parameters after iteration " << iteration << " (mean distortion "
          << batch.mean_distortion << ")";
      throw NumericalError(msg.str());
    }
    RandomStream value_rng = rng_stream(config, "value", iteration);
    update_value(agent.value, adam, batch, options, value_rng);
    if (!agent.value.all_finite()) {
      std::ostringstream msg;
      msg << "train: non-finite value parameters after iteration " << iteration;
      throw NumericalError(msg.str());
    }
    agent.normalizer.update(batch.raw);

    done += count;
    point.episode = done;
    point.time_slots = slots_done;
    point.mean_distortion = batch.mean_distortion;
    point.kl = update.kl;
    point.accepted = update.accepted;
    point.policy_entropy = agent.policy.entropy();
    result.curve.push_back(point);
    if (progress) progress(point, agent);
    ++iteration;
  }
  result.agent = std::move(agent);
  return result;
}

PolicyEvaluation evaluate_policy(const Agent& agent, const ScenarioConfig& config, const FieldStatistics& field,
                                 const EhModel& model, int n_episodes, std::uint64_t first_realization) {
  if (n_episodes <= 0) throw ValidationError("evaluate_policy: n_episodes must be positive");
  if (agent.n_sensors != config.n()) throw ValidationError("evaluate_policy: agent does not match the scenario");
  PolicyEvaluation out;
  for (int e = 0; e < n_episodes; ++e) {
    const std::vector<SlotState> slots =
        realize_horizon(config, field, first_realization + static_cast<std::uint64_t>(e));
    const EnvContext ctx{config, field, slots, agent.include_phase};
    out.per_episode.push_back(run_episode(agent, ctx, model, nullptr).mean_distortion());
  }
  const double n = static_cast<double>(n_episodes);
  out.mean = std::accumulate(out.per_episode.begin(), out.per_episode.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : out.per_episode) ss += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(ss / n);
  return out;
}

}  // namespace wpt
