#ifndef WPT_TESTS_FIXTURES_HPP_
#define WPT_TESTS_FIXTURES_HPP_

#include <Eigen/Dense>
#include <complex>
#include <random>
#include <vector>

#include "wpt/channel.hpp"
#include "wpt/field.hpp"
#include "wpt/scenario.hpp"

namespace wpt::testing {

// Config with n nodes and horizon T; geometry defaults.
inline ScenarioConfig small_config(int n, int horizon, double budget = 3.0) {
  ScenarioConfig c = default_scenario();
  c.network.n_sensors = n;
  c.network.horizon = horizon;
  c.network.power_budget = budget;
  c.network.nodes.clear();
  c.validate();
  return c;
}

// Single-phase diagonal field with the given per-node variances.
inline FieldStatistics diagonal_field(const Eigen::VectorXd& variance) {
  const auto n = variance.size();
  return FieldStatistics({make_phase(Eigen::MatrixXcd::Identity(n, n), variance)});
}

// The same channel in every slot.
inline std::vector<SlotState> constant_slots(int horizon, const Eigen::VectorXd& h, const Eigen::VectorXd& g2,
                                             const Eigen::VectorXd& sigma2) {
  std::vector<SlotState> slots;
  for (int t = 1; t <= horizon; ++t) {
    SlotState s;
    s.t = t;
    s.energy_gain = h;
    s.info_gain = g2;
    s.signal_variance = sigma2;
    s.fading_energy = Eigen::VectorXcd::Ones(h.size());
    s.fading_info = Eigen::VectorXcd::Ones(h.size());
    slots.push_back(std::move(s));
  }
  return slots;
}

inline Eigen::MatrixXcd random_orthonormal(int n, int s, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXcd a(n, s);
  for (int c = 0; c < s; ++c)
    for (int r = 0; r < n; ++r) a(r, c) = {normal(rng), normal(rng)};
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(a);
  return qr.householderQ() * Eigen::MatrixXcd::Identity(n, s);
}

inline Eigen::VectorXd uniform_vector(int n, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

inline double relative_error(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace wpt::testing

#endif  // WPT_TESTS_FIXTURES_HPP_
