#ifndef WPT_HARVEST_HPP_
#define WPT_HARVEST_HPP_

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace wpt {

enum class EhVariant { Linear, Quadratic, Logistic };

std::string_view to_string(EhVariant v);
// Accepts "linear"/"quad"/"quadratic"/"logistic"/"sigmoid" and the scenario-label letters L/Q/S.
EhVariant parse_variant(std::string_view text);
char label_letter(EhVariant v);

struct LinearParams {
  double zeta = 0.0;
  bool operator==(const LinearParams&) const = default;
};

struct QuadraticParams {
  double a1 = 0.0;
  double a2 = 0.0;
  double a3 = 0.0;
  bool operator==(const QuadraticParams&) const = default;
};

struct LogisticParams {
  double b1 = 0.0;
  double b2 = 0.0;
  double b3 = 0.0;
  bool operator==(const LogisticParams&) const = default;
};

/// Harvest transfer function: RF input power at the rectifier (W) to extractable
/// DC power (W).
///
/// Every variant clamps its input at `saturation_input()`; the quadratic variant
/// additionally never rises past its vertex, so it stays flat beyond
/// min(saturation_input, -a2 / 2a1). Output is floored at zero.
class EhModel {
 public:
  static constexpr double kNoSaturation = std::numeric_limits<double>::infinity();

  static EhModel linear(double zeta, double saturation_input = kNoSaturation);
  static EhModel quadratic(double a1, double a2, double a3, double saturation_input = 2.8e-3);
  static EhModel logistic(double b1, double b2, double b3, double saturation_input = kNoSaturation);

  EhVariant variant() const;
  double saturation_input() const { return saturation_input_; }
  // Input level past which the output is constant.
  double flat_from() const;

  const LinearParams* as_linear() const { return std::get_if<LinearParams>(&params_); }
  const QuadraticParams* as_quadratic() const { return std::get_if<QuadraticParams>(&params_); }
  const LogisticParams* as_logistic() const { return std::get_if<LogisticParams>(&params_); }

  // Throws ValidationError on negative input.
  double phi(double input_power) const;

  // Smooth concave surrogate used by the convex solver: same as phi() but
  // without the zero floor, and optionally without the flat clamp. Only defined
  // for Linear and Quadratic. Derivatives are one-sided (0 on the flat part).
  double concave_value(double input_power, bool clamp) const;
  double concave_slope(double input_power, bool clamp) const;
  double concave_curvature(double input_power, bool clamp) const;

  bool is_concave() const { return variant() != EhVariant::Logistic; }

  bool operator==(const EhModel&) const = default;

 private:
  EhModel(std::variant<LinearParams, QuadraticParams, LogisticParams> p, double sat)
      : params_(p), saturation_input_(sat) {}

  std::variant<LinearParams, QuadraticParams, LogisticParams> params_;
  double saturation_input_ = kNoSaturation;
};

// E = tau_E * phi(q * h)
double harvested_energy(const EhModel& model, double beacon_power, double gain, double tau_energy = 1.0);

struct CalibrationSample {
  double input = 0.0;   // W
  double output = 0.0;  // W
};

struct FitResult {
  EhModel model;
  // Quadratic only: the unconstrained fit was convex and a1 was pinned to -1e-12.
  bool constrained = false;
  double residual_sum_squares = 0.0;
  int iterations = 0;
};

FitResult fit_model(EhVariant variant, std::span<const CalibrationSample> samples);

// Reads the `input_mw,output_mw` calibration CSV (header required).
std::vector<CalibrationSample> read_calibration_csv(const std::string& path);

// Synthetic calibration points: the default quadratic on a 0..5 mW grid,
// flat past 2.8 mW. Not hardware data.
std::vector<CalibrationSample> synthetic_calibration();

// Defaults shipped with the toolkit. Quadratic peaks at exactly 2.8 mW input;
// the linear and logistic defaults are least-squares fits to synthetic_calibration().
EhModel default_model(EhVariant variant);

}  // namespace wpt

#endif  // WPT_HARVEST_HPP_
