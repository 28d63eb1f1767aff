#include "wpt/field.hpp"

#include <cmath>
#include <complex>
#include <random>

#include "wpt/errors.hpp"

namespace wpt {

Eigen::MatrixXcd PhaseFactors::covariance() const {
  return basis * eigenvalues.asDiagonal() * basis.adjoint();
}

PhaseFactors make_phase(Eigen::MatrixXcd basis, Eigen::VectorXd eigenvalues) {
  if (basis.cols() != eigenvalues.size()) throw ValidationError("field: basis/eigenvalue size mismatch");
  if ((eigenvalues.array() <= 0.0).any()) throw ValidationError("field: eigenvalues must be positive");
  PhaseFactors f;
  f.node_variance = (basis.cwiseAbs2() * eigenvalues);
  f.basis = std::move(basis);
  f.eigenvalues = std::move(eigenvalues);
  return f;
}

FieldStatistics::FieldStatistics(std::vector<PhaseFactors> phases) : phases_(std::move(phases)) {
  if (phases_.empty()) throw ValidationError("field: at least one phase required");
}

const PhaseFactors& FieldStatistics::at(int t) const {
  if (t < 1) throw ValidationError("field: slot index must be >= 1");
  return phases_[static_cast<std::size_t>(t % period())];
}

Eigen::MatrixXcd haar_unitary(int n, RandomStream& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  Eigen::MatrixXcd z(n, n);
  for (int c = 0; c < n; ++c) {
    for (int r = 0; r < n; ++r) z(r, c) = {normal(rng), normal(rng)};
  }
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(z);
  Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(n, n);
  const Eigen::MatrixXcd& r = qr.matrixQR();
  for (int k = 0; k < n; ++k) {
    const std::complex<double> d = r(k, k);
    const double mag = std::abs(d);
    if (mag > 0.0) q.col(k) *= d / mag;
  }
  return q;
}

Eigen::VectorXd phase_eigenvalues(int n, double base, int phase) {
  const double nu = std::pow(base, phase);
  Eigen::VectorXd eta(n);
  for (int k = 0; k < n; ++k) eta(k) = std::pow(nu, k);
  return eta * (n / eta.sum());
}

FieldStatistics build_field(const ScenarioConfig& config, RandomStream& rng) {
  const int n = config.n();
  std::vector<PhaseFactors> phases;
  phases.reserve(config.field.period);
  for (int m = 0; m < config.field.period; ++m) {
    Eigen::MatrixXcd u = config.field.diagonal ? Eigen::MatrixXcd::Identity(n, n) : haar_unitary(n, rng);
    phases.push_back(make_phase(std::move(u), phase_eigenvalues(n, config.field.eigenvalue_base, m)));
  }
  return FieldStatistics(std::move(phases));
}

FieldStatistics build_field(const ScenarioConfig& config) {
  auto rng = rng_stream(config, "haar", 0);
  return build_field(config, rng);
}

}  // namespace wpt
