#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "wpt/estimation.hpp"

using namespace wpt;
using wpt::testing::relative_error;

namespace {

DistortionInput random_instance(int n, int s, std::mt19937_64& rng) {
  DistortionInput in;
  in.basis = testing::random_orthonormal(n, s, rng);
  in.eigenvalues = testing::uniform_vector(s, 0.05, 2.0, rng);
  in.weights = testing::uniform_vector(n, 1e-4, 1e-2, rng);
  in.noise_variance = 1e-7;
  in.power = testing::uniform_vector(n, 1e-6, 1e-3, rng);
  return in;
}

// tr(K - K A (A K A + s I)^-1 A K) with K = U L U^H, A = diag(sqrt(w p)).
double dense_oracle(const DistortionInput& in) {
  const auto n = in.basis.rows();
  const Eigen::MatrixXcd k = in.basis * in.eigenvalues.asDiagonal() * in.basis.adjoint();
  const Eigen::VectorXcd a = (in.weights.array() * in.power.array()).sqrt().matrix().cast<std::complex<double>>();
  const Eigen::MatrixXcd ka = k * a.asDiagonal();
  const Eigen::MatrixXcd sy =
      a.asDiagonal() * k * a.asDiagonal() + in.noise_variance * Eigen::MatrixXcd::Identity(n, n);
  const Eigen::MatrixXcd err = k - ka * sy.inverse() * ka.adjoint();
  return err.trace().real();
}

}  // namespace

TEST_SUITE("estimation") {
  TEST_CASE("scalar example") {
    DistortionInput in;
    in.basis = Eigen::MatrixXcd::Ones(1, 1);
    in.eigenvalues = Eigen::VectorXd::Ones(1);
    in.weights = Eigen::VectorXd::Ones(1);
    in.noise_variance = 0.1;
    in.power = Eigen::VectorXd::Constant(1, 0.9);
    CHECK(distortion(in) == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(distortion_gradient(in)(0) == doctest::Approx(-0.1).epsilon(1e-12));
  }

  TEST_CASE("zero power leaves the prior") {
    std::mt19937_64 rng(1);
    DistortionInput in = random_instance(5, 5, rng);
    in.power.setZero();
    CHECK(distortion(in) == doctest::Approx(in.eigenvalues.sum()).epsilon(1e-12));
  }

  TEST_CASE("matches the dense-inverse oracle") {
    std::mt19937_64 rng(2);
    for (int k = 0; k < 10; ++k) {
      const DistortionInput in = random_instance(4, k % 2 ? 4 : 3, rng);
      CHECK(relative_error(distortion(in), dense_oracle(in)) < 1e-10);
    }
  }

  TEST_CASE("diagonal closed form") {
    std::mt19937_64 rng(3);
    DistortionInput in = random_instance(6, 6, rng);
    in.basis = Eigen::MatrixXcd::Identity(6, 6);
    const Eigen::VectorXd g2 = in.weights.cwiseProduct(in.eigenvalues);
    CHECK(relative_error(distortion(in), diagonal_distortion(g2, in.eigenvalues, in.noise_variance, in.power)) < 1e-12);
  }

  TEST_CASE("gradient matches central differences") {
    std::mt19937_64 rng(4);
    for (int k = 0; k < 20; ++k) {
      DistortionInput in = random_instance(1 + k % 6, 1 + k % 6, rng);
      const Eigen::VectorXd g = distortion_gradient(in);
      CHECK((g.array() <= 0.0).all());
      for (Eigen::Index i = 0; i < g.size(); ++i) {
        const double step = 1e-6 * std::max(in.power(i), 1e-6);
        DistortionInput up = in, down = in;
        up.power(i) += step;
        down.power(i) -= step;
        const double fd = (distortion(up) - distortion(down)) / (2.0 * step);
        CHECK(relative_error(g(i), fd) < 1e-5);
      }
    }
  }

  TEST_CASE("hessian matches differences of the gradient") {
    std::mt19937_64 rng(5);
    for (int k = 0; k < 5; ++k) {
      DistortionInput in = random_instance(5, 4, rng);
      const DistortionDerivatives d = distortion_derivatives(in, true);
      CHECK(d.value == doctest::Approx(distortion(in)).epsilon(1e-14));
      CHECK((d.gradient - distortion_gradient(in)).norm() <= 1e-12 * d.gradient.norm());
      CHECK((d.hessian - d.hessian.transpose()).norm() <= 1e-12 * d.hessian.norm());
      for (Eigen::Index j = 0; j < 5; ++j) {
        const double step = 1e-6 * in.power(j);
        DistortionInput up = in, down = in;
        up.power(j) += step;
        down.power(j) -= step;
        const Eigen::VectorXd col = (distortion_gradient(up) - distortion_gradient(down)) / (2.0 * step);
        CHECK((col - d.hessian.col(j)).norm() <= 1e-5 * col.norm());
      }
      CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(d.hessian).eigenvalues().minCoeff() >=
            -1e-9 * d.hessian.norm());
    }
  }

  TEST_CASE("distortion decreases with power") {
    std::mt19937_64 rng(6);
    DistortionInput in = random_instance(4, 4, rng);
    double prev = distortion(in);
    for (int k = 0; k < 20; ++k) {
      in.power *= 1.5;
      const double v = distortion(in);
      CHECK(v <= prev);
      prev = v;
    }
  }

  TEST_CASE("slot adapter divides gains by signal variance") {
    SlotState s;
    s.info_gain = Eigen::Vector2d(2.0, 3.0);
    s.signal_variance = Eigen::Vector2d(0.5, 1.5);
    const PhaseFactors phase = make_phase(Eigen::MatrixXcd::Identity(2, 2), Eigen::Vector2d(0.5, 1.5));
    const DistortionInput in = make_distortion_input(s, phase, 1e-7, Eigen::Vector2d(1e-3, 2e-3));
    CHECK(in.weights(0) == doctest::Approx(4.0));
    CHECK(in.weights(1) == doctest::Approx(2.0));
  }

  TEST_CASE("monte carlo uplink agrees with the analytic error") {
    std::mt19937_64 rng(7);
    const DistortionInput in = random_instance(3, 3, rng);
    auto stream = rng_stream(1, "uplink", 0);
    const UplinkEstimate est = simulate_uplink(in, 20000, stream);
    CHECK(relative_error(est.mse, distortion(in)) < 0.03);
    for (Eigen::Index i = 0; i < 3; ++i) CHECK(relative_error(est.transmit_power(i), in.power(i)) < 0.05);

    DistortionInput silent = in;
    silent.power.setZero();
    auto stream2 = rng_stream(1, "uplink", 1);
    CHECK(relative_error(simulate_uplink(silent, 10000, stream2).mse, in.eigenvalues.sum()) < 0.02);
  }
}
