#ifndef WPT_CHANNEL_HPP_
#define WPT_CHANNEL_HPP_

#include <Eigen/Dense>
#include <iosfwd>
#include <span>
#include <vector>

#include "wpt/field.hpp"
#include "wpt/scenario.hpp"

namespace wpt {

/// Channel and field realization of one slot.
struct SlotState {
  int t = 1;
  Eigen::VectorXd energy_gain;      // h_t^i
  Eigen::VectorXd info_gain;        // |g_t^i|^2
  Eigen::VectorXd signal_variance;  // sigma^2_{x^i} at this slot
  Eigen::VectorXcd fading_energy;   // Z_E
  Eigen::VectorXcd fading_info;     // Z_I
};

// Path-loss part of the gains (|Z| = 1).
Eigen::VectorXd mean_energy_gain(const ScenarioConfig& config);
Eigen::VectorXd mean_info_gain(const ScenarioConfig& config);

// One fading draw CN(mean, variance): real and imaginary parts each carry half the variance.
std::complex<double> draw_fading(const ChannelConfig& channel, RandomStream& rng);

SlotState realize_slot(const ScenarioConfig& config, const FieldStatistics& stats, int t, RandomStream& rng);

// Slots 1..T of fading realization `realization`, drawn from rng_stream(config, "fading", realization).
std::vector<SlotState> realize_horizon(const ScenarioConfig& config, const FieldStatistics& stats,
                                       std::uint64_t realization);

// Same horizon with |Z| = 1 regardless of the config's fading flag.
std::vector<SlotState> mean_channel_horizon(const ScenarioConfig& config, const FieldStatistics& stats);

// columns: t, i, h, g2, sigma2 (i is 1-based)
void write_channel_csv(std::ostream& out, std::span<const SlotState> slots);

}  // namespace wpt

#endif  // WPT_CHANNEL_HPP_
