#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

#include "wpt/errors.hpp"
#include "wpt/harvest.hpp"

using namespace wpt;

namespace {

std::vector<EhModel> shipped_models() {
  return {default_model(EhVariant::Linear), default_model(EhVariant::Quadratic), default_model(EhVariant::Logistic)};
}

}  // namespace

TEST_SUITE("harvest") {
  TEST_CASE("variant names") {
    CHECK(parse_variant("linear") == EhVariant::Linear);
    CHECK(parse_variant("quad") == EhVariant::Quadratic);
    CHECK(parse_variant("Q") == EhVariant::Quadratic);
    CHECK(parse_variant("logistic") == EhVariant::Logistic);
    CHECK(parse_variant("S") == EhVariant::Logistic);
    CHECK_THROWS_AS(parse_variant("cubic"), ValidationError);
    CHECK(label_letter(EhVariant::Logistic) == 'S');
  }

  TEST_CASE("linear") {
    const EhModel m = EhModel::linear(0.5);
    CHECK(m.phi(2e-3) == doctest::Approx(1e-3));
    CHECK(m.phi(0.0) == 0.0);
    CHECK(harvested_energy(EhModel::linear(1.0), 0.7, 1.0, 1.0) == doctest::Approx(0.7));
    CHECK_THROWS_AS(EhModel::linear(0.0), ValidationError);
    CHECK_THROWS_AS(EhModel::linear(1.5), ValidationError);
  }

  TEST_CASE("quadratic vertex and clamp") {
    const EhModel m = EhModel::quadratic(-1.0, 2.0, 0.0, 1.0);
    CHECK(m.phi(1.0) == doctest::Approx(1.0));
    CHECK(m.phi(1.5) == doctest::Approx(1.0));
    CHECK(m.phi(0.5) == doctest::Approx(0.75));
    CHECK(m.flat_from() == doctest::Approx(1.0));
    const EhModel far = EhModel::quadratic(-1.0, 2.0, 0.0, 10.0);
    CHECK(far.phi(3.0) == doctest::Approx(1.0));
    const EhModel offset = EhModel::quadratic(-1.0, 2.0, 0.25, 1.0);
    CHECK(harvested_energy(offset, 0.0, 1.0, 2.0) == doctest::Approx(0.5));
    CHECK_THROWS_AS(EhModel::quadratic(1.0, 2.0, 0.0), ValidationError);
  }

  TEST_CASE("default quadratic saturates at 2.8 mW") {
    const EhModel q = default_model(EhVariant::Quadratic);
    CHECK(q.flat_from() == doctest::Approx(2.8e-3).epsilon(1e-12));
    CHECK(q.phi(5e-3) == q.phi(2.8e-3));
    CHECK(q.phi(2.7e-3) < q.phi(2.8e-3));
  }

  TEST_CASE("logistic endpoints") {
    for (const auto& p : {LogisticParams{5000.0, 1e-3, 2e-3}, LogisticParams{1.0, 3.0, 7.0},
                          *default_model(EhVariant::Logistic).as_logistic()}) {
      const EhModel m = EhModel::logistic(p.b1, p.b2, p.b3);
      CHECK(m.phi(0.0) == 0.0);
      CHECK(std::abs(m.phi(p.b2 + 30.0 / p.b1) - p.b3) < 1e-9 * std::max(1.0, p.b3));
      CHECK(harvested_energy(m, 0.0, 0.5, 1.0) == 0.0);
    }
    CHECK_THROWS_AS(EhModel::logistic(-1.0, 1.0, 1.0), ValidationError);
  }

  TEST_CASE("negative input is rejected") {
    CHECK_THROWS_AS(EhModel::linear(0.5).phi(-1e-9), ValidationError);
    CHECK_THROWS_AS(default_model(EhVariant::Logistic).phi(-1.0), ValidationError);
  }

  TEST_CASE("shipped models are monotone on a grid") {
    for (const EhModel& m : shipped_models()) {
      double prev = m.phi(0.0);
      CHECK(prev >= 0.0);
      for (int k = 1; k <= 2000; ++k) {
        const double v = m.phi(1e-5 * k);
        CHECK(v >= prev);
        prev = v;
      }
    }
  }

  TEST_CASE("linear and quadratic are concave on a grid") {
    for (const EhModel& m : {default_model(EhVariant::Linear), default_model(EhVariant::Quadratic)}) {
      CHECK(m.is_concave());
      for (int k = 1; k < 1000; ++k) {
        const double x = 1e-5 * k, d = 1e-5;
        CHECK(m.phi(x - d) + m.phi(x + d) - 2.0 * m.phi(x) <= 1e-15);
      }
    }
    CHECK_FALSE(default_model(EhVariant::Logistic).is_concave());
  }

  TEST_CASE("concave surrogate derivatives") {
    const EhModel q = default_model(EhVariant::Quadratic);
    const double x = 1.3e-3, h = 1e-9;
    CHECK(q.concave_slope(x, true) ==
          doctest::Approx((q.concave_value(x + h, true) - q.concave_value(x - h, true)) / (2 * h)).epsilon(1e-6));
    CHECK(q.concave_curvature(x, true) == doctest::Approx(2.0 * q.as_quadratic()->a1));
    CHECK(q.concave_slope(4e-3, true) == 0.0);
    CHECK(q.concave_curvature(4e-3, true) == 0.0);
    CHECK_THROWS_AS(default_model(EhVariant::Logistic).concave_value(1e-3, true), ValidationError);
  }

  TEST_CASE("fit recovers an exact linear model") {
    std::vector<CalibrationSample> s;
    for (int k = 0; k <= 10; ++k) s.push_back({1e-3 * k, 0.5e-3 * k});
    const FitResult r = fit_model(EhVariant::Linear, s);
    CHECK(std::abs(r.model.as_linear()->zeta - 0.5) < 1e-12);
  }

  TEST_CASE("fit recovers an exact quadratic") {
    std::vector<CalibrationSample> s;
    for (double x : {0.0, 0.5, 1.0, 1.5, 2.0}) s.push_back({x, -x * x + 2.0 * x});
    const FitResult r = fit_model(EhVariant::Quadratic, s);
    const auto* q = r.model.as_quadratic();
    CHECK(std::abs(q->a1 + 1.0) < 1e-9);
    CHECK(std::abs(q->a2 - 2.0) < 1e-9);
    CHECK(std::abs(q->a3) < 1e-9);
    CHECK_FALSE(r.constrained);
    CHECK(r.model.flat_from() == doctest::Approx(1.0));
  }

  TEST_CASE("convex data pins the quadratic to the concave boundary") {
    std::vector<CalibrationSample> s;
    for (int k = 0; k <= 10; ++k) {
      const double x = 1e-3 * k;
      s.push_back({x, 10.0 * x * x + 0.1 * x});
    }
    const FitResult r = fit_model(EhVariant::Quadratic, s);
    CHECK(r.constrained);
    CHECK(r.model.as_quadratic()->a1 < 0.0);
  }

  TEST_CASE("fit recovers a noisy logistic") {
    const EhModel truth = EhModel::logistic(5000.0, 1e-3, 2e-3);
    std::mt19937_64 rng(11);
    std::normal_distribution<double> noise(0.0, 0.01);
    std::vector<CalibrationSample> s;
    for (int k = 0; k <= 40; ++k) {
      const double x = 0.1e-3 * k;
      s.push_back({x, truth.phi(x) * (1.0 + noise(rng))});
    }
    const auto* p = fit_model(EhVariant::Logistic, s).model.as_logistic();
    CHECK(std::abs(p->b1 / 5000.0 - 1.0) < 0.1);
    CHECK(std::abs(p->b2 / 1e-3 - 1.0) < 0.1);
    CHECK(std::abs(p->b3 / 2e-3 - 1.0) < 0.1);
  }

  TEST_CASE("default linear slope is the least-squares fit to the synthetic data") {
    double sxy = 0.0, sxx = 0.0;
    for (const auto& c : synthetic_calibration()) {
      sxy += c.input * c.output;
      sxx += c.input * c.input;
    }
    CHECK(default_model(EhVariant::Linear).as_linear()->zeta == doctest::Approx(sxy / sxx).epsilon(1e-12));
  }

  TEST_CASE("calibration csv") {
    const auto dir = std::filesystem::temp_directory_path();
    const auto good = dir / "wpt_cal_good.csv";
    std::ofstream(good) << "input_mw,output_mw\n0,0\n1,0.5\n2,1\n";
    const auto s = read_calibration_csv(good.string());
    REQUIRE(s.size() == 3);
    CHECK(s[1].input == doctest::Approx(1e-3));
    CHECK(s[1].output == doctest::Approx(0.5e-3));
    const auto bad = dir / "wpt_cal_bad.csv";
    std::ofstream(bad) << "x,y\n0,0\n";
    CHECK_THROWS_AS(read_calibration_csv(bad.string()), ValidationError);
  }
}
