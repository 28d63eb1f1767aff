#ifndef WPT_ESTIMATION_HPP_
#define WPT_ESTIMATION_HPP_

#include <Eigen/Dense>

#include "wpt/channel.hpp"
#include "wpt/field.hpp"
#include "wpt/scenario.hpp"

namespace wpt {

/// Everything the per-slot LMMSE error depends on.
struct DistortionInput {
  Eigen::MatrixXcd basis;       // U
  Eigen::VectorXd eigenvalues;  // diag(Lambda)
  Eigen::VectorXd weights;      // |g_i|^2 / sigma^2_{x^i}
  double noise_variance = 0.0;
  Eigen::VectorXd power;        // p, W
};

DistortionInput make_distortion_input(const SlotState& slot, const PhaseFactors& phase, double noise_variance,
                                      const Eigen::VectorXd& power);

// tr[(Lambda^-1 + U^H G P U / sigma_w^2)^-1]
double distortion(const DistortionInput& input);

// d distortion / d p_i = -(g_i / sigma_w^2) ||M^-1 u_i||^2, all <= 0.
Eigen::VectorXd distortion_gradient(const DistortionInput& input);

struct DistortionDerivatives {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;  // empty unless requested
};

// Shares one factorization between value, gradient and (optionally) Hessian.
DistortionDerivatives distortion_derivatives(const DistortionInput& input, bool with_hessian);

// Diagonal-covariance closed form: sum_i sigma_w^2 s_i / (|g_i|^2 p_i + sigma_w^2).
double diagonal_distortion(const Eigen::VectorXd& info_gain, const Eigen::VectorXd& signal_variance,
                           double noise_variance, const Eigen::VectorXd& power);

struct UplinkEstimate {
  double mse = 0.0;
  Eigen::VectorXd transmit_power;  // (1/M) sum (p_i / sigma^2_{x^i}) |x_i|^2
};

// Monte-Carlo run of the uncoded uplink with an LMMSE sink. Channel phases are zero.
UplinkEstimate simulate_uplink(const DistortionInput& input, int samples, RandomStream& rng);

}  // namespace wpt

#endif  // WPT_ESTIMATION_HPP_
