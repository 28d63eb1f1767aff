#include "wpt/channel.hpp"

#include <cmath>
#include <ostream>
#include <random>

#include "wpt/csv.hpp"

namespace wpt {
namespace {

double path_gain(double aperture_a, double aperture_b, double wavelength, double dist, double exponent) {
  return aperture_a * aperture_b / (wavelength * wavelength * std::pow(dist, exponent));
}

}  // namespace

Eigen::VectorXd mean_energy_gain(const ScenarioConfig& config) {
  const auto& ch = config.channel;
  Eigen::VectorXd h(config.n());
  for (int i = 0; i < config.n(); ++i) {
    h(i) = path_gain(ch.aperture_beacon, ch.aperture_node, ch.wavelength(), config.distance_energy(i),
                     ch.path_exponent_energy);
  }
  return h;
}

Eigen::VectorXd mean_info_gain(const ScenarioConfig& config) {
  const auto& ch = config.channel;
  Eigen::VectorXd g(config.n());
  for (int i = 0; i < config.n(); ++i) {
    g(i) = path_gain(ch.aperture_sink, ch.aperture_node, ch.wavelength(), config.distance_info(i),
                     ch.path_exponent_info);
  }
  return g;
}

std::complex<double> draw_fading(const ChannelConfig& channel, RandomStream& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(channel.fading_variance / 2.0));
  const double re = normal(rng);
  const double im = normal(rng);
  return {channel.fading_mean + re, im};
}

SlotState realize_slot(const ScenarioConfig& config, const FieldStatistics& stats, int t, RandomStream& rng) {
  const int n = config.n();
  SlotState s;
  s.t = t;
  s.energy_gain = mean_energy_gain(config);
  s.info_gain = mean_info_gain(config);
  s.signal_variance = covariance_at(stats, t).node_variance;
  s.fading_energy = Eigen::VectorXcd::Ones(n);
  s.fading_info = Eigen::VectorXcd::Ones(n);
  if (!config.channel.deterministic_fading) {
    for (int i = 0; i < n; ++i) {
      s.fading_energy(i) = draw_fading(config.channel, rng);
      s.fading_info(i) = draw_fading(config.channel, rng);
    }
    s.energy_gain.array() *= s.fading_energy.cwiseAbs2().array();
    s.info_gain.array() *= s.fading_info.cwiseAbs2().array();
  }
  return s;
}

std::vector<SlotState> realize_horizon(const ScenarioConfig& config, const FieldStatistics& stats,
                                       std::uint64_t realization) {
  auto rng = rng_stream(config, "fading", realization);
  std::vector<SlotState> slots;
  slots.reserve(config.horizon());
  for (int t = 1; t <= config.horizon(); ++t) slots.push_back(realize_slot(config, stats, t, rng));
  return slots;
}

std::vector<SlotState> mean_channel_horizon(const ScenarioConfig& config, const FieldStatistics& stats) {
  ScenarioConfig flat = config;
  flat.channel.deterministic_fading = true;
  return realize_horizon(flat, stats, 0);
}

void write_channel_csv(std::ostream& out, std::span<const SlotState> slots) {
  CsvWriter w(out, {"t", "i", "h", "g2", "sigma2"});
  for (const auto& s : slots) {
    for (Eigen::Index i = 0; i < s.energy_gain.size(); ++i) {
      w.cell(s.t).cell(static_cast<int>(i + 1)).cell(s.energy_gain(i)).cell(s.info_gain(i)).cell(
          s.signal_variance(i));
      w.end_row();
    }
  }
}

}  // namespace wpt
