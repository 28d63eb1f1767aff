#include "wpt/estimation.hpp"

#include <cmath>
#include <random>

#include "wpt/errors.hpp"

namespace wpt {
namespace {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void check(const DistortionInput& in) {
  const auto n = in.basis.rows();
  if (in.weights.size() != n || in.power.size() != n || in.eigenvalues.size() != in.basis.cols()) {
    throw ValidationError("distortion: dimension mismatch");
  }
  if ((in.power.array() < 0.0).any()) throw ValidationError("distortion: negative sensor power");
  if ((in.eigenvalues.array() <= 0.0).any()) throw ValidationError("distortion: eigenvalues must be positive");
  if ((in.weights.array() <= 0.0).any()) throw ValidationError("distortion: weights must be positive");
  if (!(in.noise_variance > 0.0)) throw ValidationError("distortion: noise variance must be positive");
}

// M = Lambda^-1 + U^H diag(c) U with c_i = g_i p_i / sigma_w^2
MatrixXcd inner_matrix(const DistortionInput& in) {
  const VectorXd c = in.weights.cwiseProduct(in.power) / in.noise_variance;
  MatrixXcd m = in.basis.adjoint() * c.asDiagonal() * in.basis;
  m.diagonal().real() += in.eigenvalues.cwiseInverse();
  return m;
}

// Cholesky with one jittered retry.
Eigen::LLT<MatrixXcd> factor(const MatrixXcd& m) {
  Eigen::LLT<MatrixXcd> llt(m);
  if (llt.info() == Eigen::Success) return llt;
  MatrixXcd jittered = m;
  jittered.diagonal().array() += 1e-14 * m.diagonal().real().sum();
  llt.compute(jittered);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("distortion: inner matrix is not positive definite");
  }
  return llt;
}

}  // namespace

DistortionInput make_distortion_input(const SlotState& slot, const PhaseFactors& phase, double noise_variance,
                                      const VectorXd& power) {
  DistortionInput in;
  in.basis = phase.basis;
  in.eigenvalues = phase.eigenvalues;
  in.weights = slot.info_gain.cwiseQuotient(phase.node_variance);
  in.noise_variance = noise_variance;
  in.power = power;
  return in;
}

DistortionDerivatives distortion_derivatives(const DistortionInput& in, bool with_hessian) {
  check(in);
  const auto llt = factor(inner_matrix(in));
  const auto s = in.basis.cols();
  const MatrixXcd minv = llt.solve(MatrixXcd::Identity(s, s));
  DistortionDerivatives d;
  d.value = minv.diagonal().real().sum();
  // columns of V = U^H are the u_i
  const MatrixXcd w = minv * in.basis.adjoint();  // M^-1 u_i
  const VectorXd c = in.weights / in.noise_variance;
  d.gradient = -c.cwiseProduct(w.colwise().squaredNorm().transpose());
  if (with_hessian) {
    const MatrixXcd b1 = in.basis * w;        // u_i^H M^-1 u_j
    const MatrixXcd b2 = w.adjoint() * w;     // u_i^H M^-2 u_j
    d.hessian = 2.0 * (c * c.transpose()).cwiseProduct(b1.cwiseProduct(b2.conjugate()).real());
  }
  return d;
}

double distortion(const DistortionInput& in) {
  check(in);
  const auto llt = factor(inner_matrix(in));
  const auto s = in.basis.cols();
  return llt.solve(MatrixXcd::Identity(s, s)).diagonal().real().sum();
}

VectorXd distortion_gradient(const DistortionInput& in) { return distortion_derivatives(in, false).gradient; }

double diagonal_distortion(const VectorXd& info_gain, const VectorXd& signal_variance, double noise_variance,
                           const VectorXd& power) {
  double err = 0.0;
  for (Eigen::Index i = 0; i < power.size(); ++i) {
    err += noise_variance * signal_variance(i) / (info_gain(i) * power(i) + noise_variance);
  }
  return err;
}

UplinkEstimate simulate_uplink(const DistortionInput& in, int samples, RandomStream& rng) {
  check(in);
  if (samples < 1) throw ValidationError("simulate_uplink: sample count must be >= 1");
  const auto n = in.basis.rows();
  const auto s = in.basis.cols();
  const MatrixXcd k = in.basis * in.eigenvalues.asDiagonal() * in.basis.adjoint();
  const VectorXd var = k.diagonal().real();
  // y = D x + w with D = diag(sqrt(g_i p_i))
  const VectorXd amp = in.weights.cwiseProduct(in.power).cwiseSqrt();
  MatrixXcd ky = amp.asDiagonal() * k * amp.asDiagonal();
  ky.diagonal().real().array() += in.noise_variance;
  const MatrixXcd kxy = k * amp.asDiagonal();
  const MatrixXcd gain = ky.llt().solve(kxy.adjoint()).adjoint();  // K_xy K_y^-1
  const MatrixXcd mix = in.basis * in.eigenvalues.cwiseSqrt().asDiagonal();

  std::normal_distribution<double> unit(0.0, std::sqrt(0.5));
  const double noise_sd = std::sqrt(in.noise_variance);
  Eigen::VectorXcd z(s), w(n);
  double err = 0.0;
  VectorXd energy = VectorXd::Zero(n);
  for (int j = 0; j < samples; ++j) {
    for (Eigen::Index k2 = 0; k2 < s; ++k2) z(k2) = {unit(rng), unit(rng)};
    for (Eigen::Index i = 0; i < n; ++i) w(i) = {noise_sd * unit(rng), noise_sd * unit(rng)};
    const Eigen::VectorXcd x = mix * z;
    const Eigen::VectorXcd y = amp.cwiseProduct(x) + w;
    err += (x - gain * y).squaredNorm();
    energy += x.cwiseAbs2();
  }
  UplinkEstimate out;
  out.mse = err / samples;
  out.transmit_power = in.power.cwiseQuotient(var).cwiseProduct(energy) / samples;
  return out;
}

}  // namespace wpt
