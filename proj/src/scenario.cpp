#include "wpt/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "wpt/errors.hpp"
#include "wpt/units.hpp"

namespace wpt {

using nlohmann::json;

double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

std::vector<Point> default_node_positions(int n_sensors) {
  std::vector<Point> out;
  const double offset = static_cast<double>(n_sensors / 2);
  for (int j = 1; j <= n_sensors; ++j) out.push_back({0.0, j - offset});
  return out;
}

const EhModel& HarvestConfig::model(EhVariant v) const {
  switch (v) {
    case EhVariant::Linear: return linear;
    case EhVariant::Quadratic: return quadratic;
    case EhVariant::Logistic: return logistic;
  }
  throw ValidationError("unknown harvest variant");
}

namespace {

const json kAbsent;

void require(bool ok, const std::string& field, const std::string& bound) {
  if (!ok) throw ValidationError("scenario: " + field + " must satisfy " + bound);
}

// Reads keys from one JSON object and rejects anything it was not asked about.
class Section {
 public:
  Section(const json& doc, std::string name) : name_(std::move(name)) {
    if (doc.is_null()) return;
    if (!doc.is_object()) throw ValidationError("scenario: '" + name_ + "' must be an object");
    obj_ = &doc;
  }

  ~Section() noexcept(false) {
    if (!obj_ || std::uncaught_exceptions() > 0) return;
    for (const auto& [key, _] : obj_->items()) {
      if (!seen_.count(key)) throw ValidationError("scenario: unknown key '" + path(key) + "'");
    }
  }

  const json* get(const std::string& key) {
    seen_.insert(key);
    if (!obj_) return nullptr;
    const auto it = obj_->find(key);
    return it == obj_->end() ? nullptr : &*it;
  }

  std::string path(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

  template <typename T>
  void read(const std::string& key, T& out) {
    if (const json* v = get(key)) {
      try {
        if constexpr (std::is_same_v<T, double>) {
          if (!v->is_number()) throw ValidationError("expected a number");
        } else if constexpr (std::is_same_v<T, bool>) {
          if (!v->is_boolean()) throw ValidationError("expected a boolean");
        } else if constexpr (std::is_integral_v<T>) {
          if (!v->is_number_integer()) throw ValidationError("expected an integer");
        }
        out = v->get<T>();
      } catch (const std::exception& e) {
        throw ValidationError("scenario: " + path(key) + ": " + e.what());
      }
    }
  }

  void read_power(const std::string& key, double& out) {
    if (const json* v = get(key)) {
      if (v->is_number()) {
        out = v->get<double>();
      } else if (v->is_string()) {
        out = parse_power(v->get<std::string>());
      } else {
        throw ValidationError("scenario: " + path(key) + ": expected Watts or a string like '3 mW'");
      }
    }
  }

  void read_point(const std::string& key, Point& out) {
    if (const json* v = get(key)) out = parse_point(*v, path(key));
  }

  static Point parse_point(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      throw ValidationError("scenario: " + where + ": expected [x, y] in meters");
    }
    return {v[0].get<double>(), v[1].get<double>()};
  }

 private:
  std::string name_;
  const json* obj_ = nullptr;
  std::set<std::string> seen_;
};

json point_json(const Point& p) { return json::array({p.x, p.y}); }

json saturation_json(double s) { return std::isfinite(s) ? json(s) : json(nullptr); }

void read_saturation(Section& sec, double& out) {
  if (const json* v = sec.get("saturation_input")) {
    if (v->is_null()) {
      out = EhModel::kNoSaturation;
    } else if (v->is_number()) {
      out = v->get<double>();
    } else if (v->is_string()) {
      out = parse_power(v->get<std::string>());
    } else {
      throw ValidationError("scenario: " + sec.path("saturation_input") + ": expected Watts or null");
    }
  }
}

std::array<double, 3> read_triple(Section& sec, const std::string& key, std::array<double, 3> fallback) {
  if (const json* v = sec.get(key)) {
    if (!v->is_array() || v->size() != 3) {
      throw ValidationError("scenario: " + sec.path(key) + ": expected three numbers");
    }
    for (int k = 0; k < 3; ++k) {
      if (!(*v)[k].is_number()) throw ValidationError("scenario: " + sec.path(key) + ": expected numbers");
      fallback[k] = (*v)[k].get<double>();
    }
  }
  return fallback;
}

}  // namespace

void ScenarioConfig::validate() {
  auto& net = network;
  require(net.n_sensors >= 1, "network.n_sensors", ">= 1");
  require(net.horizon >= 1, "network.horizon", ">= 1");
  require(net.power_budget > 0.0 && std::isfinite(net.power_budget), "network.power_budget", "> 0");
  require(net.noise_variance > 0.0 && std::isfinite(net.noise_variance), "network.noise_variance", "> 0");
  require(net.tau_info > 0.0, "network.tau_info", "> 0");
  require(net.tau_energy > 0.0, "network.tau_energy", "> 0");
  if (net.nodes.empty()) net.nodes = default_node_positions(net.n_sensors);
  if (static_cast<int>(net.nodes.size()) != net.n_sensors) {
    throw ValidationError("scenario: network.nodes: geometry arity mismatch (expected " +
                          std::to_string(net.n_sensors) + " positions, got " +
                          std::to_string(net.nodes.size()) + ")");
  }
  for (int i = 0; i < net.n_sensors; ++i) {
    require(distance_energy(i) > 0.0, "network.nodes[" + std::to_string(i) + "]",
            "distance to beacon > 0");
    require(distance_info(i) > 0.0, "network.nodes[" + std::to_string(i) + "]", "distance to sink > 0");
  }
  const auto& ch = channel;
  require(ch.aperture_beacon > 0.0, "channel.aperture_beacon", "> 0");
  require(ch.aperture_sink > 0.0, "channel.aperture_sink", "> 0");
  require(ch.aperture_node > 0.0, "channel.aperture_node", "> 0");
  require(ch.frequency > 0.0, "channel.frequency_hz", "> 0");
  require(ch.speed_of_light > 0.0, "channel.speed_of_light", "> 0");
  require(ch.path_exponent_energy > 0.0, "channel.path_exponent_energy", "> 0");
  require(ch.path_exponent_info > 0.0, "channel.path_exponent_info", "> 0");
  require(ch.fading_variance >= 0.0, "channel.fading_variance", ">= 0");
  require(field.period >= 1, "field.period", ">= 1");
  require(field.eigenvalue_base > 0.0 && field.eigenvalue_base <= 1.0, "field.eigenvalue_base", "in (0, 1]");
  require(solver.initial_barrier > 0.0, "solver.initial_barrier", "> 0");
  require(solver.final_barrier > 0.0 && solver.final_barrier <= solver.initial_barrier,
          "solver.final_barrier", "in (0, initial_barrier]");
  require(solver.gap_tolerance > 0.0, "solver.gap_tolerance", "> 0");
  require(solver.max_newton_steps >= 1, "solver.max_newton_steps", ">= 1");
  require(rl.episodes >= 0, "rl.episodes", ">= 0");
  require(rl.batch_episodes >= 1, "rl.batch_episodes", ">= 1");
  require(rl.gamma > 0.0 && rl.gamma <= 1.0, "rl.gamma", "in (0, 1]");
  require(rl.gae_lambda >= 0.0 && rl.gae_lambda <= 1.0, "rl.gae_lambda", "in [0, 1]");
  require(rl.kl_target > 0.0, "rl.kl_target", "> 0");
  require(rl.cg_iterations >= 1, "rl.cg_iterations", ">= 1");
  require(rl.cg_damping >= 0.0, "rl.cg_damping", ">= 0");
  require(rl.max_backtracks >= 1, "rl.max_backtracks", ">= 1");
  require(rl.value_learning_rate > 0.0, "rl.value_learning_rate", "> 0");
  require(rl.value_epochs >= 1, "rl.value_epochs", ">= 1");
  require(rl.value_minibatch >= 1, "rl.value_minibatch", ">= 1");
  require(rl.initial_log_std >= -20.0 && rl.initial_log_std <= 2.0, "rl.initial_log_std", "in [-20, 2]");
  require(!rl.policy_hidden.empty(), "rl.policy_hidden", "non-empty");
  require(!rl.value_hidden.empty(), "rl.value_hidden", "non-empty");
  for (int h : rl.policy_hidden) require(h >= 1, "rl.policy_hidden", "entries >= 1");
  for (int h : rl.value_hidden) require(h >= 1, "rl.value_hidden", "entries >= 1");
}

ScenarioConfig default_scenario() {
  ScenarioConfig c;
  c.validate();
  return c;
}

ScenarioConfig scenario_from_json(const json& doc) {
  if (!doc.is_object()) throw ValidationError("scenario: top level must be a JSON object");
  ScenarioConfig c;
  {
    Section top(doc, "");
    {
      const json* v = top.get("network");
      Section s(v ? *v : kAbsent, "network");
      s.read("n_sensors", c.network.n_sensors);
      s.read("horizon", c.network.horizon);
      s.read_power("power_budget", c.network.power_budget);
      s.read_power("noise_variance", c.network.noise_variance);
      s.read("tau_info", c.network.tau_info);
      s.read("tau_energy", c.network.tau_energy);
      s.read_point("beacon", c.network.beacon);
      s.read_point("sink", c.network.sink);
      if (const json* nodes = s.get("nodes")) {
        if (!nodes->is_array()) throw ValidationError("scenario: network.nodes: expected an array of [x, y]");
        for (std::size_t k = 0; k < nodes->size(); ++k) {
          c.network.nodes.push_back(
              Section::parse_point((*nodes)[k], "network.nodes[" + std::to_string(k) + "]"));
        }
      }
    }
    {
      const json* v = top.get("channel");
      Section s(v ? *v : kAbsent, "channel");
      s.read("aperture_beacon", c.channel.aperture_beacon);
      s.read("aperture_sink", c.channel.aperture_sink);
      s.read("aperture_node", c.channel.aperture_node);
      s.read("frequency_hz", c.channel.frequency);
      s.read("speed_of_light", c.channel.speed_of_light);
      s.read("path_exponent_energy", c.channel.path_exponent_energy);
      s.read("path_exponent_info", c.channel.path_exponent_info);
      s.read("fading_mean", c.channel.fading_mean);
      s.read("fading_variance", c.channel.fading_variance);
      s.read("deterministic_fading", c.channel.deterministic_fading);
    }
    {
      const json* v = top.get("field");
      Section s(v ? *v : kAbsent, "field");
      s.read("period", c.field.period);
      s.read("eigenvalue_base", c.field.eigenvalue_base);
      s.read("diagonal", c.field.diagonal);
    }
    {
      const json* v = top.get("harvest");
      Section s(v ? *v : kAbsent, "harvest");
      if (const json* m = s.get("model")) {
        if (!m->is_string()) throw ValidationError("scenario: harvest.model: expected a string");
        c.harvest.active = parse_variant(m->get<std::string>());
      }
      if (const json* lv = s.get("linear")) {
        Section ls(*lv, "harvest.linear");
        double zeta = c.harvest.linear.as_linear()->zeta;
        double sat = c.harvest.linear.saturation_input();
        ls.read("zeta", zeta);
        read_saturation(ls, sat);
        c.harvest.linear = EhModel::linear(zeta, sat);
      }
      if (const json* qv = s.get("quadratic")) {
        Section qs(*qv, "harvest.quadratic");
        const auto* q = c.harvest.quadratic.as_quadratic();
        const auto a = read_triple(qs, "alpha", {q->a1, q->a2, q->a3});
        double sat = c.harvest.quadratic.saturation_input();
        read_saturation(qs, sat);
        c.harvest.quadratic = EhModel::quadratic(a[0], a[1], a[2], sat);
      }
      if (const json* sv = s.get("logistic")) {
        Section ss(*sv, "harvest.logistic");
        const auto* l = c.harvest.logistic.as_logistic();
        const auto b = read_triple(ss, "beta", {l->b1, l->b2, l->b3});
        double sat = c.harvest.logistic.saturation_input();
        read_saturation(ss, sat);
        c.harvest.logistic = EhModel::logistic(b[0], b[1], b[2], sat);
      }
    }
    {
      const json* v = top.get("solver");
      Section s(v ? *v : kAbsent, "solver");
      s.read("clamp_quadratic", c.solver.clamp_quadratic);
      s.read("initial_barrier", c.solver.initial_barrier);
      s.read("final_barrier", c.solver.final_barrier);
      s.read("gap_tolerance", c.solver.gap_tolerance);
      s.read("max_newton_steps", c.solver.max_newton_steps);
    }
    {
      const json* v = top.get("rl");
      Section s(v ? *v : kAbsent, "rl");
      s.read("episodes", c.rl.episodes);
      s.read("batch_episodes", c.rl.batch_episodes);
      s.read("gamma", c.rl.gamma);
      s.read("gae_lambda", c.rl.gae_lambda);
      s.read("kl_target", c.rl.kl_target);
      s.read("cg_iterations", c.rl.cg_iterations);
      s.read("cg_damping", c.rl.cg_damping);
      s.read("max_backtracks", c.rl.max_backtracks);
      s.read("value_learning_rate", c.rl.value_learning_rate);
      s.read("value_epochs", c.rl.value_epochs);
      s.read("value_minibatch", c.rl.value_minibatch);
      s.read("initial_log_std", c.rl.initial_log_std);
      s.read("policy_hidden", c.rl.policy_hidden);
      s.read("value_hidden", c.rl.value_hidden);
      s.read("obs_include_phase", c.rl.obs_include_phase);
    }
    if (const json* seed = top.get("seed")) {
      if (!seed->is_number_unsigned() && !(seed->is_number_integer() && seed->get<long long>() >= 0)) {
        throw ValidationError("scenario: seed: expected a nonnegative integer");
      }
      c.seed = seed->get<std::uint64_t>();
    }
  }
  c.validate();
  return c;
}

json to_json(const ScenarioConfig& c) {
  json nodes = json::array();
  for (const auto& p : c.network.nodes) nodes.push_back(point_json(p));
  const auto* lin = c.harvest.linear.as_linear();
  const auto* quad = c.harvest.quadratic.as_quadratic();
  const auto* logi = c.harvest.logistic.as_logistic();
  return json{
      {"network",
       {{"n_sensors", c.network.n_sensors},
        {"horizon", c.network.horizon},
        {"power_budget", c.network.power_budget},
        {"noise_variance", c.network.noise_variance},
        {"tau_info", c.network.tau_info},
        {"tau_energy", c.network.tau_energy},
        {"beacon", point_json(c.network.beacon)},
        {"sink", point_json(c.network.sink)},
        {"nodes", nodes}}},
      {"channel",
       {{"aperture_beacon", c.channel.aperture_beacon},
        {"aperture_sink", c.channel.aperture_sink},
        {"aperture_node", c.channel.aperture_node},
        {"frequency_hz", c.channel.frequency},
        {"speed_of_light", c.channel.speed_of_light},
        {"path_exponent_energy", c.channel.path_exponent_energy},
        {"path_exponent_info", c.channel.path_exponent_info},
        {"fading_mean", c.channel.fading_mean},
        {"fading_variance", c.channel.fading_variance},
        {"deterministic_fading", c.channel.deterministic_fading}}},
      {"field",
       {{"period", c.field.period},
        {"eigenvalue_base", c.field.eigenvalue_base},
        {"diagonal", c.field.diagonal}}},
      {"harvest",
       {{"model", std::string(to_string(c.harvest.active))},
        {"linear", {{"zeta", lin->zeta}, {"saturation_input", saturation_json(c.harvest.linear.saturation_input())}}},
        {"quadratic",
         {{"alpha", {quad->a1, quad->a2, quad->a3}},
          {"saturation_input", saturation_json(c.harvest.quadratic.saturation_input())}}},
        {"logistic",
         {{"beta", {logi->b1, logi->b2, logi->b3}},
          {"saturation_input", saturation_json(c.harvest.logistic.saturation_input())}}}}},
      {"solver",
       {{"clamp_quadratic", c.solver.clamp_quadratic},
        {"initial_barrier", c.solver.initial_barrier},
        {"final_barrier", c.solver.final_barrier},
        {"gap_tolerance", c.solver.gap_tolerance},
        {"max_newton_steps", c.solver.max_newton_steps}}},
      {"rl",
       {{"episodes", c.rl.episodes},
        {"batch_episodes", c.rl.batch_episodes},
        {"gamma", c.rl.gamma},
        {"gae_lambda", c.rl.gae_lambda},
        {"kl_target", c.rl.kl_target},
        {"cg_iterations", c.rl.cg_iterations},
        {"cg_damping", c.rl.cg_damping},
        {"max_backtracks", c.rl.max_backtracks},
        {"value_learning_rate", c.rl.value_learning_rate},
        {"value_epochs", c.rl.value_epochs},
        {"value_minibatch", c.rl.value_minibatch},
        {"initial_log_std", c.rl.initial_log_std},
        {"policy_hidden", c.rl.policy_hidden},
        {"value_hidden", c.rl.value_hidden},
        {"obs_include_phase", c.rl.obs_include_phase}}},
      {"seed", c.seed},
  };
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("scenario: cannot open '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("scenario: " + path.string() + ": " + e.what());
  }
  return scenario_from_json(doc);
}

namespace {

// FNV-1a, stable across platforms (std::hash is not).
std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

RandomStream rng_stream(std::uint64_t seed, std::string_view label, std::uint64_t index) {
  const std::uint64_t tag = fnv1a(label);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return RandomStream(seq);
}

}  // namespace wpt
