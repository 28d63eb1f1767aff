#include "wpt/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <json.hpp>
#include <ostream>
#include <string>

#include "wpt/errors.hpp"

namespace wpt {

using Eigen::VectorXd;
using nlohmann::json;

namespace {

constexpr std::array<char, 8> kMagic{'W', 'P', 'T', 'C', 'K', 'P', 'T', '\0'};

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> bytes{};
  for (int k = 0; k < 8; ++k) bytes[static_cast<std::size_t>(k)] = static_cast<char>((v >> (8 * k)) & 0xffu);
  out.write(bytes.data(), 8);
}

std::uint64_t get_u64(std::istream& in) {
  std::array<unsigned char, 8> bytes{};
  if (!in.read(reinterpret_cast<char*>(bytes.data()), 8)) throw ValidationError("checkpoint: truncated file");
  std::uint64_t v = 0;
  for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(bytes[static_cast<std::size_t>(k)]) << (8 * k);
  return v;
}

std::vector<double> to_vector(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

VectorXd from_json_vector(const json& j, const char* what) {
  if (!j.is_array()) throw ValidationError(std::string("checkpoint: ") + what + " must be an array");
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v(static_cast<Eigen::Index>(k)) = j[k].get<double>();
  return v;
}

}  // namespace

void save_checkpoint(std::ostream& out, const Agent& agent) {
  json header;
  header["format_version"] = kCheckpointVersion;
  header["n_sensors"] = agent.n_sensors;
  header["period"] = agent.period;
  header["obs_include_phase"] = agent.include_phase;
  header["policy_layers"] = agent.policy.mean.layer_sizes();
  header["value_layers"] = agent.value.layer_sizes();
  header["log_std_size"] = agent.policy.log_std.size();
  header["normalizer"] = {{"count", agent.normalizer.count()},
                          {"mean", to_vector(agent.normalizer.mean())},
                          {"variance", to_vector(agent.normalizer.variance())}};
  const VectorXd payload = [&] {
    VectorXd p(agent.policy.parameter_count() + agent.value.parameter_count());
    p << agent.policy.parameters(), agent.value.parameters();
    return p;
  }();
  header["payload_doubles"] = payload.size();
  const std::string text = header.dump();

  out.write(kMagic.data(), kMagic.size());
  put_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (Eigen::Index k = 0; k < payload.size(); ++k) put_u64(out, std::bit_cast<std::uint64_t>(payload(k)));
  if (!out) throw ValidationError("checkpoint: write failed");
}

void save_checkpoint(const std::filesystem::path& path, const Agent& agent) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("checkpoint: cannot open " + path.string() + " for writing");
  save_checkpoint(out, agent);
}

Agent load_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw ValidationError("checkpoint: bad magic");
  const std::uint64_t length = get_u64(in);
  if (length > (std::uint64_t{1} << 30)) throw ValidationError("checkpoint: header too large");
  std::string text(length, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(length))) throw ValidationError("checkpoint: truncated header");

  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("checkpoint: header is not JSON: ") + e.what());
  }
  try {
    if (header.at("format_version").get<int>() != kCheckpointVersion)
      throw ValidationError("checkpoint: unsupported format_version");
    Agent agent;
    agent.n_sensors = header.at("n_sensors").get<int>();
    agent.period = header.at("period").get<int>();
    agent.include_phase = header.at("obs_include_phase").get<bool>();
    agent.policy.mean = Mlp(header.at("policy_layers").get<std::vector<int>>());
    agent.policy.log_std = VectorXd::Zero(header.at("log_std_size").get<Eigen::Index>());
    agent.value = Mlp(header.at("value_layers").get<std::vector<int>>());
    const auto& norm = header.at("normalizer");
    agent.normalizer = RunningNormalizer(norm.at("count").get<double>(), from_json_vector(norm.at("mean"), "mean"),
                                         from_json_vector(norm.at("variance"), "variance"));
    if (agent.policy.mean.input_size() != agent.observation_size() ||
        agent.policy.mean.output_size() != agent.action_size() || agent.policy.log_std.size() != agent.action_size() ||
        agent.value.input_size() != agent.observation_size() || agent.value.output_size() != 1 ||
        agent.normalizer.mean().size() != agent.observation_size())
      throw ValidationError("checkpoint: inconsistent layer sizes");

    const Eigen::Index np = agent.policy.parameter_count(), nv = agent.value.parameter_count();
    if (header.at("payload_doubles").get<Eigen::Index>() != np + nv)
      throw ValidationError("checkpoint: payload size does not match layer sizes");
    VectorXd payload(np + nv);
    for (Eigen::Index k = 0; k < payload.size(); ++k) payload(k) = std::bit_cast<double>(get_u64(in));
    if (!payload.allFinite()) throw ValidationError("checkpoint: non-finite weights");
    agent.policy.set_parameters(payload.head(np));
    agent.value.set_parameters(payload.tail(nv));
    return agent;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("checkpoint: malformed header: ") + e.what());
  }
}

Agent load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("checkpoint: cannot open " + path.string());
  return load_checkpoint(in);
}

}  // namespace wpt
