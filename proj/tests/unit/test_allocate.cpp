#include <doctest.h>

#include <cmath>
#include <limits>

#include "fixtures.hpp"
#include "wpt/allocate.hpp"
#include "wpt/errors.hpp"
#include "wpt/estimation.hpp"

using namespace wpt;
using wpt::testing::relative_error;

namespace {

struct Fixture {
  ScenarioConfig config;
  FieldStatistics field;
  std::vector<SlotState> slots;
  Eigen::VectorXd h, g2, sigma2;
};

Fixture constant_fixture(const Eigen::VectorXd& h, const Eigen::VectorXd& g2, const Eigen::VectorXd& sigma2, int horizon,
                         double budget, double noise) {
  ScenarioConfig c = testing::small_config(static_cast<int>(h.size()), horizon, budget);
  c.network.noise_variance = noise;
  return {c, testing::diagonal_field(sigma2), testing::constant_slots(horizon, h, g2, sigma2), h, g2, sigma2};
}

// Per-slot objective of a time-uniform linear plan that gives node i the share q_i.
double reduced_objective(const Fixture& f, double zeta, const Eigen::VectorXd& q) {
  const Eigen::VectorXd p = zeta * f.h.cwiseProduct(q);
  return diagonal_distortion(f.g2, f.sigma2, f.config.network.noise_variance, p);
}

}  // namespace

TEST_SUITE("allocate") {
  TEST_CASE("single node single slot spends everything") {
    Fixture f = constant_fixture(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1), 1, 1.0,
                                 0.1);
    const AllocationPlan plan = solve_convex(f.config, f.slots, f.field, EhModel::linear(0.5));
    CHECK(plan.q(0, 0) == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(plan.p(0, 0) == doctest::Approx(0.5).epsilon(1e-7));
    CHECK(plan.objective == doctest::Approx(1.0 / (1.0 + 5.0)).epsilon(1e-7));
    CHECK(is_feasible(plan));
  }

  TEST_CASE("closed form: symmetric nodes split evenly") {
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(4);
    Fixture f = constant_fixture(ones, ones, ones, 3, 2.0, 0.1);
    const AllocationPlan plan = closed_form_linear(f.config, f.g2, f.h, f.sigma2, EhModel::linear(0.5));
    CHECK((plan.q.array() - 0.5).abs().maxCoeff() < 1e-9);
    CHECK(check_time_uniformity(plan) == 0.0);
  }

  TEST_CASE("closed form: single node takes the whole budget") {
    Fixture f = constant_fixture(Eigen::VectorXd::Constant(1, 0.3), Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1),
                                 2, 2.0, 0.1);
    const AllocationPlan plan = closed_form_linear(f.config, f.g2, f.h, f.sigma2, EhModel::linear(0.5));
    CHECK(plan.p(0, 0) == doctest::Approx(0.3 * 0.5 * 2.0).epsilon(1e-9));
    CHECK(plan.p(1, 0) == plan.p(0, 0));
  }

  TEST_CASE("closed form matches a simplex grid search") {
    Fixture f = constant_fixture(Eigen::Vector3d(1.0, 0.6, 0.3), Eigen::Vector3d(0.8, 1.5, 0.4),
                                 Eigen::Vector3d(1.2, 0.7, 1.0), 2, 1.0, 0.1);
    const double zeta = 0.5;
    const AllocationPlan plan = closed_form_linear(f.config, f.g2, f.h, f.sigma2, EhModel::linear(zeta));
    const int steps = 1414;
    double best = std::numeric_limits<double>::infinity();
    for (int a = 0; a <= steps; ++a) {
      for (int b = 0; a + b <= steps; ++b) {
        const Eigen::Vector3d q(a, b, steps - a - b);
        best = std::min(best, reduced_objective(f, zeta, q / steps));
      }
    }
    CHECK(std::abs(plan.objective - best) < 1e-5);
    CHECK(plan.objective <= best + 1e-12);
    CHECK(std::abs(plan.q.row(0).sum() - 1.0) < 1e-9);
    const double kappa = closed_form_multiplier(f.config, f.g2, f.h, f.sigma2, EhModel::linear(zeta));
    CHECK(kappa > 0.0);
  }

  TEST_CASE("generic solver agrees with the closed form and is time uniform") {
    Fixture f = constant_fixture(Eigen::Vector3d(1.0, 0.6, 0.3), Eigen::Vector3d(0.8, 1.5, 0.4),
                                 Eigen::Vector3d(1.2, 0.7, 1.0), 4, 1.0, 0.1);
    const EhModel lin = EhModel::linear(0.5);
    const AllocationPlan cf = closed_form_linear(f.config, f.g2, f.h, f.sigma2, lin);
    const AllocationPlan num = solve_convex(f.config, f.slots, f.field, lin);
    CHECK(relative_error(num.objective, cf.objective) < 1e-6);
    CHECK(check_time_uniformity(num) <= 1e-4);
    CHECK(num.kkt_residual < 1e-6);
    CHECK(is_feasible(num));
  }

  TEST_CASE("quadratic solver beats a 2-node 2-slot grid") {
    Fixture f = constant_fixture(Eigen::Vector2d(1.0, 0.5), Eigen::Vector2d(1.0, 2.0), Eigen::Vector2d(1.0, 1.0), 2,
                                 1.5, 0.1);
    f.slots[1].energy_gain = Eigen::Vector2d(0.6, 0.9);
    const EhModel quad = EhModel::quadratic(-1.0, 2.0, 0.0, 1.0);
    const AllocationPlan plan = solve_convex(f.config, f.slots, f.field, quad);
    CHECK(is_feasible(plan));
    const int n = 50;
    const double pb = f.config.network.power_budget;
    double best = std::numeric_limits<double>::infinity();
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        const double q1 = pb * a / (n - 1), q2 = pb * b / (n - 1);
        const Eigen::Vector2d e1(quad.phi(f.slots[0].energy_gain(0) * q1), quad.phi(f.slots[0].energy_gain(1) * (pb - q1)));
        const Eigen::Vector2d e2(quad.phi(f.slots[1].energy_gain(0) * q2), quad.phi(f.slots[1].energy_gain(1) * (pb - q2)));
        for (int c = 0; c < n; ++c) {
          for (int d = 0; d < n; ++d) {
            const Eigen::Vector2d frac(static_cast<double>(c) / (n - 1), static_cast<double>(d) / (n - 1));
            const Eigen::Vector2d p1 = frac.cwiseProduct(e1);
            const Eigen::Vector2d p2 = e1 - p1 + e2;
            const double v = 0.5 * (diagonal_distortion(f.g2, f.sigma2, 0.1, p1) +
                                    diagonal_distortion(f.g2, f.sigma2, 0.1, p2));
            best = std::min(best, v);
          }
        }
      }
    }
    CHECK(best >= plan.objective - 1e-5);
  }

  TEST_CASE("logistic is rejected by the convex solver") {
    const ScenarioConfig c = default_scenario();
    const FieldStatistics field = build_field(c);
    CHECK_THROWS_AS(solve_convex(c, mean_channel_horizon(c, field), field, default_model(EhVariant::Logistic)),
                    ValidationError);
  }

  TEST_CASE("default scenario plan is certified feasible") {
    const ScenarioConfig c = default_scenario();
    const FieldStatistics field = build_field(c);
    const auto slots = mean_channel_horizon(c, field);
    for (EhVariant v : {EhVariant::Linear, EhVariant::Quadratic}) {
      const AllocationPlan plan = solve_convex(c, slots, field, c.harvest.model(v));
      CHECK(plan.neutrality_slack >= -kFeasibilityTolerance);
      CHECK(plan.budget_slack >= -kFeasibilityTolerance);
      CHECK(plan.sign_slack >= -kFeasibilityTolerance);
      CHECK(plan.kkt_residual < 1e-6);
      CHECK(relative_error(mean_distortion(plan.p, c, slots, field), plan.objective) < 1e-12);
      const PlanEvaluation ev = evaluate_plan(plan, c, slots, field, c.harvest.model(v));
      CHECK(relative_error(ev.mean_distortion, plan.objective) < 1e-12);
    }
  }

  TEST_CASE("matched model beats the mismatched replay") {
    const ScenarioConfig c = default_scenario();
    const FieldStatistics field = build_field(c);
    const auto slots = mean_channel_horizon(c, field);
    const EhModel& quad = c.harvest.model(EhVariant::Quadratic);
    const AllocationPlan lin_plan = solve_convex(c, slots, field, c.harvest.model(EhVariant::Linear));
    const AllocationPlan quad_plan = solve_convex(c, slots, field, quad);
    const PlanEvaluation replay = evaluate_plan(lin_plan, c, slots, field, quad);
    CHECK(replay.mean_distortion >= quad_plan.objective);
    AllocationPlan repaired = replay.repaired;
    certify(repaired, c, slots, quad);
    CHECK(repaired.neutrality_slack >= -kFeasibilityTolerance);
  }

  TEST_CASE("overdraw is repaired and the leftover spent at the end") {
    Fixture f = constant_fixture(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1), 3, 1.0,
                                 0.1);
    AllocationPlan plan;
    plan.q = Eigen::MatrixXd::Ones(3, 1);
    plan.p.resize(3, 1);
    plan.p << 0.8, 0.2, 0.5;
    const PlanEvaluation ev = evaluate_plan(plan, f.config, f.slots, f.field, EhModel::linear(0.5));
    CHECK(ev.repaired.p(0, 0) == doctest::Approx(0.5));
    CHECK(ev.repaired.p(1, 0) == doctest::Approx(0.2));
    CHECK(ev.repaired.p(2, 0) == doctest::Approx(0.8));
  }

  TEST_CASE("more budget never hurts") {
    ScenarioConfig c = testing::small_config(3, 6);
    const FieldStatistics field = build_field(c);
    double prev = std::numeric_limits<double>::infinity();
    for (double pb : {0.5, 1.0, 2.0, 4.0}) {
      c.network.power_budget = pb;
      const AllocationPlan plan = solve_convex(c, mean_channel_horizon(c, field), field, c.harvest.model(EhVariant::Quadratic));
      CHECK(plan.objective <= prev * (1.0 + 1e-9));
      prev = plan.objective;
    }
  }

  TEST_CASE("time uniformity reports without throwing") {
    AllocationPlan plan;
    plan.p.resize(2, 2);
    plan.p << 1.0, 2.0, 0.5, 2.0;
    plan.q = Eigen::MatrixXd::Ones(2, 2);
    CHECK(check_time_uniformity(plan) == doctest::Approx(0.5));
  }
}
