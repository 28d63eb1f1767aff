#include "wpt/harvest.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "wpt/csv.hpp"
#include "wpt/errors.hpp"

namespace wpt {
namespace {

constexpr double kPinnedCurvature = -1e-12;

// Logistic φ written with σ(z) = 1 / (1 + e^{-z}); S = σ(-b1 b2).
double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double logistic_phi(const LogisticParams& p, double x) {
  const double s = sigmoid(-p.b1 * p.b2);
  return p.b3 * (sigmoid(p.b1 * (x - p.b2)) - s) / (1.0 - s);
}

void check_saturation(double sat) {
  if (!(sat > 0.0)) throw ValidationError("harvest: saturation_input must be > 0");
}

}  // namespace

std::string_view to_string(EhVariant v) {
  switch (v) {
    case EhVariant::Linear: return "linear";
    case EhVariant::Quadratic: return "quadratic";
    case EhVariant::Logistic: return "logistic";
  }
  return "?";
}

char label_letter(EhVariant v) {
  switch (v) {
    case EhVariant::Linear: return 'L';
    case EhVariant::Quadratic: return 'Q';
    case EhVariant::Logistic: return 'S';
  }
  return '?';
}

EhVariant parse_variant(std::string_view text) {
  if (text == "linear" || text == "L") return EhVariant::Linear;
  if (text == "quad" || text == "quadratic" || text == "Q") return EhVariant::Quadratic;
  if (text == "logistic" || text == "sigmoid" || text == "S") return EhVariant::Logistic;
  throw ValidationError("unknown harvest model '" + std::string(text) +
                        "' (expected linear|quad|logistic or L|Q|S)");
}

EhModel EhModel::linear(double zeta, double saturation_input) {
  if (!(zeta > 0.0 && zeta <= 1.0)) throw ValidationError("harvest.linear: zeta must be in (0, 1]");
  check_saturation(saturation_input);
  return EhModel(LinearParams{zeta}, saturation_input);
}

EhModel EhModel::quadratic(double a1, double a2, double a3, double saturation_input) {
  if (!(a1 < 0.0)) throw ValidationError("harvest.quadratic: alpha1 must be < 0 (concavity)");
  if (!std::isfinite(a2) || !std::isfinite(a3)) throw ValidationError("harvest.quadratic: non-finite alpha");
  check_saturation(saturation_input);
  return EhModel(QuadraticParams{a1, a2, a3}, saturation_input);
}

EhModel EhModel::logistic(double b1, double b2, double b3, double saturation_input) {
  if (!(b1 > 0.0 && b2 > 0.0 && b3 > 0.0)) {
    throw ValidationError("harvest.logistic: beta1, beta2, beta3 must all be > 0");
  }
  check_saturation(saturation_input);
  return EhModel(LogisticParams{b1, b2, b3}, saturation_input);
}

EhVariant EhModel::variant() const {
  return static_cast<EhVariant>(params_.index());
}

double EhModel::flat_from() const {
  if (const auto* q = as_quadratic()) {
    const double vertex = -q->a2 / (2.0 * q->a1);
    return std::clamp(vertex, 0.0, saturation_input_);
  }
  return saturation_input_;
}

double EhModel::phi(double input_power) const {
  if (input_power < 0.0 || std::isnan(input_power)) {
    throw ValidationError("harvest: negative input power");
  }
  const double x = std::min(input_power, flat_from());
  double out = 0.0;
  if (const auto* l = as_linear()) {
    out = l->zeta * x;
  } else if (const auto* q = as_quadratic()) {
    out = (q->a1 * x + q->a2) * x + q->a3;
  } else {
    out = logistic_phi(std::get<LogisticParams>(params_), x);
  }
  return std::max(out, 0.0);
}

double EhModel::concave_value(double input_power, bool clamp) const {
  const double x = clamp ? std::min(input_power, flat_from()) : input_power;
  if (const auto* l = as_linear()) return l->zeta * x;
  if (const auto* q = as_quadratic()) return (q->a1 * x + q->a2) * x + q->a3;
  throw ValidationError("harvest: logistic model is not concave");
}

double EhModel::concave_slope(double input_power, bool clamp) const {
  if (clamp && input_power >= flat_from()) return 0.0;
  if (const auto* l = as_linear()) return l->zeta;
  if (const auto* q = as_quadratic()) return 2.0 * q->a1 * input_power + q->a2;
  throw ValidationError("harvest: logistic model is not concave");
}

double EhModel::concave_curvature(double input_power, bool clamp) const {
  if (clamp && input_power >= flat_from()) return 0.0;
  if (as_linear()) return 0.0;
  if (const auto* q = as_quadratic()) return 2.0 * q->a1;
  throw ValidationError("harvest: logistic model is not concave");
}

double harvested_energy(const EhModel& model, double beacon_power, double gain, double tau_energy) {
  if (beacon_power < 0.0) throw ValidationError("harvest: negative beacon power");
  if (!(gain > 0.0)) throw ValidationError("harvest: channel gain must be > 0");
  return tau_energy * model.phi(beacon_power * gain);
}

namespace {

// All fits run in mW so the logistic parameters are O(1).
constexpr double kMilli = 1e3;

double rss(const EhModel& m, std::span<const CalibrationSample> samples) {
  double s = 0.0;
  for (const auto& smp : samples) {
    const double r = m.phi(smp.input) - smp.output;
    s += r * r;
  }
  return s;
}

FitResult fit_linear(std::span<const CalibrationSample> samples) {
  double sxy = 0.0;
  double sxx = 0.0;
  for (const auto& s : samples) {
    sxy += s.input * kMilli * s.output * kMilli;
    sxx += s.input * kMilli * s.input * kMilli;
  }
  if (sxx <= 0.0) throw ValidationError("fit: linear fit needs a nonzero input");
  const double zeta = std::clamp(sxy / sxx, 1e-12, 1.0);
  FitResult r{EhModel::linear(zeta), false, 0.0, 1};
  r.residual_sum_squares = rss(r.model, samples);
  return r;
}

FitResult fit_quadratic(std::span<const CalibrationSample> samples) {
  const auto n = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixXd a(n, 3);
  Eigen::VectorXd y(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double x = samples[k].input * kMilli;
    a.row(k) << x * x, x, 1.0;
    y(k) = samples[k].output * kMilli;
  }
  const Eigen::Matrix3d normal = a.transpose() * a;
  Eigen::Vector3d coef = normal.ldlt().solve(a.transpose() * y);
  // back to Watts: out = a1 x^2 + a2 x + a3 with x, out in W
  double a1 = coef(0) * kMilli;
  double a2 = coef(1);
  double a3 = coef(2) / kMilli;
  bool constrained = false;
  if (!(a1 < 0.0)) {
    constrained = true;
    a1 = kPinnedCurvature;
    Eigen::MatrixXd b(n, 2);
    Eigen::VectorXd z(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const double x = samples[k].input;
      b.row(k) << x * kMilli, 1.0;
      z(k) = (samples[k].output - a1 * x * x) * kMilli;
    }
    const Eigen::Matrix2d nb = b.transpose() * b;
    const Eigen::Vector2d c = nb.ldlt().solve(b.transpose() * z);
    a2 = c(0);
    a3 = c(1) / kMilli;
  }
  const double vertex = -a2 / (2.0 * a1);
  const double sat = vertex > 0.0 ? vertex : EhModel::kNoSaturation;
  FitResult r{EhModel::quadratic(a1, a2, a3, sat), constrained, 0.0, 1};
  r.residual_sum_squares = rss(r.model, samples);
  return r;
}

FitResult fit_logistic(std::span<const CalibrationSample> samples) {
  std::vector<CalibrationSample> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.input < b.input; });
  const auto n = static_cast<Eigen::Index>(sorted.size());
  Eigen::VectorXd x(n), y(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    x(k) = sorted[k].input * kMilli;
    y(k) = sorted[k].output * kMilli;
  }

  // initializer: b3 = max output, b2 = input at half max, b1 = 4 * max slope / b3
  const double b3 = y.maxCoeff();
  if (!(b3 > 0.0)) throw ValidationError("fit: logistic fit needs a positive output");
  double b2 = x(n - 1);
  for (Eigen::Index k = 0; k < n; ++k) {
    if (y(k) >= 0.5 * b3) {
      if (k == 0) {
        b2 = x(0);
      } else {
        const double f = (0.5 * b3 - y(k - 1)) / (y(k) - y(k - 1));
        b2 = x(k - 1) + f * (x(k) - x(k - 1));
      }
      break;
    }
  }
  double max_slope = 0.0;
  for (Eigen::Index k = 1; k < n; ++k) {
    if (x(k) > x(k - 1)) max_slope = std::max(max_slope, (y(k) - y(k - 1)) / (x(k) - x(k - 1)));
  }
  if (!(b2 > 0.0)) b2 = std::max(x(n - 1) * 0.5, 1e-6);
  const double b1 = max_slope > 0.0 ? 4.0 * max_slope / b3 : 1.0 / b2;

  // Damped Gauss-Newton on log-parameters (keeps every beta positive).
  Eigen::Vector3d theta(std::log(b1), std::log(b2), std::log(b3));
  auto residuals = [&](const Eigen::Vector3d& th, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
    const double p1 = std::exp(th(0)), p2 = std::exp(th(1)), p3 = std::exp(th(2));
    const double s = sigmoid(-p1 * p2);
    const double ds_d1 = -s * (1 - s) * p2;
    const double ds_d2 = -s * (1 - s) * p1;
    const double den = 1.0 - s;
    r.resize(n);
    if (jac) jac->resize(n, 3);
    for (Eigen::Index k = 0; k < n; ++k) {
      const double su = sigmoid(p1 * (x(k) - p2));
      const double dsu = su * (1 - su);
      const double num = su - s;
      r(k) = p3 * num / den - y(k);
      if (jac) {
        const double dnum1 = dsu * (x(k) - p2) - ds_d1;
        const double dnum2 = -dsu * p1 - ds_d2;
        const double dphi1 = p3 * (dnum1 * den + num * ds_d1) / (den * den);
        const double dphi2 = p3 * (dnum2 * den + num * ds_d2) / (den * den);
        (*jac)(k, 0) = dphi1 * p1;
        (*jac)(k, 1) = dphi2 * p2;
        (*jac)(k, 2) = num / den * p3;
      }
    }
  };

  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
  residuals(theta, r, &jac);
  double cost = r.squaredNorm();
  double damping = 1e-3;
  constexpr int kMaxIterations = 500;
  constexpr double kStepTolerance = 1e-10;
  int it = 0;
  bool converged = false;
  for (; it < kMaxIterations; ++it) {
    const Eigen::Matrix3d jtj = jac.transpose() * jac;
    const Eigen::Vector3d grad = jac.transpose() * r;
    Eigen::Matrix3d lhs = jtj;
    lhs.diagonal() += damping * jtj.diagonal().cwiseMax(1e-12);
    const Eigen::Vector3d step = -lhs.ldlt().solve(grad);
    if (!step.allFinite()) break;
    const Eigen::Vector3d trial = theta + step;
    Eigen::VectorXd rt;
    residuals(trial, rt, nullptr);
    const double trial_cost = rt.squaredNorm();
    if (std::isfinite(trial_cost) && trial_cost <= cost) {
      theta = trial;
      residuals(theta, r, &jac);
      cost = trial_cost;
      damping = std::max(damping * 0.1, 1e-12);
      if (step.norm() <= kStepTolerance * (1.0 + theta.norm())) {
        converged = true;
        break;
      }
    } else {
      damping *= 10.0;
      // no descent direction left at this damping: we sit at a stationary point
      if (damping > 1e12 || step.norm() <= kStepTolerance * (1.0 + theta.norm())) {
        converged = true;
        break;
      }
    }
  }
  if (!converged) {
    throw NumericalError("fit: logistic Gauss-Newton did not converge after " + std::to_string(it) +
                         " iterations (residual " + std::to_string(std::sqrt(cost) / kMilli) + " W)");
  }
  FitResult res{EhModel::logistic(std::exp(theta(0)) * kMilli, std::exp(theta(1)) / kMilli,
                                  std::exp(theta(2)) / kMilli),
                false, 0.0, it + 1};
  res.residual_sum_squares = rss(res.model, samples);
  return res;
}

}  // namespace

FitResult fit_model(EhVariant variant, std::span<const CalibrationSample> samples) {
  const std::size_t needed = variant == EhVariant::Linear ? 1 : 3;
  if (samples.size() < needed) {
    throw ValidationError("fit: " + std::string(to_string(variant)) + " fit needs at least " +
                          std::to_string(needed) + " samples, got " + std::to_string(samples.size()));
  }
  for (const auto& s : samples) {
    if (!(s.input >= 0.0) || !std::isfinite(s.output)) {
      throw ValidationError("fit: sample inputs must be nonnegative and finite");
    }
  }
  switch (variant) {
    case EhVariant::Linear: return fit_linear(samples);
    case EhVariant::Quadratic: return fit_quadratic(samples);
    case EhVariant::Logistic: return fit_logistic(samples);
  }
  throw ValidationError("fit: unknown variant");
}

std::vector<CalibrationSample> read_calibration_csv(const std::string& path) {
  const auto table = read_numeric_csv(path);
  if (table.header.size() != 2 || table.header[0] != "input_mw" || table.header[1] != "output_mw") {
    throw ValidationError(path + ": expected header 'input_mw,output_mw'");
  }
  std::vector<CalibrationSample> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) out.push_back({row[0] * 1e-3, row[1] * 1e-3});
  return out;
}

namespace {

constexpr double kDefaultPeakInput = 2.8e-3;
constexpr double kDefaultSlope = 0.8;

EhModel default_quadratic() {
  return EhModel::quadratic(-kDefaultSlope / (2.0 * kDefaultPeakInput), kDefaultSlope, 0.0,
                            kDefaultPeakInput);
}

}  // namespace

std::vector<CalibrationSample> synthetic_calibration() {
  const EhModel truth = default_quadratic();
  std::vector<CalibrationSample> out;
  for (int k = 0; k <= 20; ++k) {
    const double x = 0.25e-3 * k;
    out.push_back({x, truth.phi(x)});
  }
  return out;
}

EhModel default_model(EhVariant variant) {
  switch (variant) {
    case EhVariant::Quadratic: return default_quadratic();
    case EhVariant::Linear: {
      static const EhModel fitted = fit_model(EhVariant::Linear, synthetic_calibration()).model;
      return fitted;
    }
    case EhVariant::Logistic: {
      static const EhModel fitted = fit_model(EhVariant::Logistic, synthetic_calibration()).model;
      return fitted;
    }
  }
  throw ValidationError("unknown variant");
}

}  // namespace wpt
