#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>
#include <string>

#include "wpt/allocate.hpp"
#include "wpt/bench.hpp"
#include "wpt/channel.hpp"
#include "wpt/errors.hpp"
#include "wpt/estimation.hpp"
#include "wpt/field.hpp"
#include "wpt/harvest.hpp"
#include "wpt/scenario.hpp"

namespace py = pybind11;
using namespace wpt;

namespace {

// Scenarios cross the boundary as JSON text; the Python side converts to and from dicts.
ScenarioConfig parse(const std::string& text) { return scenario_from_json(nlohmann::json::parse(text)); }

std::vector<SlotState> slots_for(const ScenarioConfig& c, const FieldStatistics& field, bool mean_channel,
                                 std::uint64_t realization) {
  return mean_channel ? mean_channel_horizon(c, field) : realize_horizon(c, field, realization);
}

py::dict plan_dict(const AllocationPlan& plan) {
  py::dict d;
  d["p"] = plan.p;
  d["q"] = plan.q;
  d["objective"] = plan.objective;
  d["kkt_residual"] = plan.kkt_residual;
  d["feasible"] = is_feasible(plan);
  return d;
}

}  // namespace

PYBIND11_MODULE(_wpt, m) {
  m.doc() = "Wireless-powered sensor network allocation core";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def("default_scenario", [] { return to_json(default_scenario()).dump(); });
  m.def("normalize_scenario", [](const std::string& text) { return to_json(parse(text)).dump(); },
        "Validate a scenario and fill in defaults.");
  m.def("load_scenario", [](const std::string& path) { return to_json(load_scenario(path)).dump(); });

  m.def("phi", [](const std::string& variant, double input) { return default_model(parse_variant(variant)).phi(input); },
        py::arg("variant"), py::arg("input_watts"));
  m.def(
      "fit_model",
      [](const std::string& variant, const std::vector<double>& inputs, const std::vector<double>& outputs) {
        if (inputs.size() != outputs.size()) throw ValidationError("fit_model: inputs and outputs differ in length");
        std::vector<CalibrationSample> samples;
        for (std::size_t k = 0; k < inputs.size(); ++k) samples.push_back({inputs[k], outputs[k]});
        const FitResult fit = fit_model(parse_variant(variant), samples);
        py::dict d;
        if (const auto* p = fit.model.as_linear()) d["zeta"] = p->zeta;
        if (const auto* p = fit.model.as_quadratic()) d["a"] = std::vector<double>{p->a1, p->a2, p->a3};
        if (const auto* p = fit.model.as_logistic()) d["b"] = std::vector<double>{p->b1, p->b2, p->b3};
        d["residual_sum_squares"] = fit.residual_sum_squares;
        d["constrained"] = fit.constrained;
        return d;
      },
      py::arg("variant"), py::arg("inputs"), py::arg("outputs"));

  m.def(
      "haar_unitary",
      [](int n, std::uint64_t seed) {
        auto rng = rng_stream(seed, "haar", 0);
        return haar_unitary(n, rng);
      },
      py::arg("n"), py::arg("seed") = 0);

  m.def("diagonal_distortion", &diagonal_distortion, py::arg("info_gain"), py::arg("signal_variance"),
        py::arg("noise_variance"), py::arg("power"));

  m.def(
      "optimize",
      [](const std::string& scenario, const std::string& assumed, bool mean_channel, std::uint64_t realization) {
        const ScenarioConfig c = parse(scenario);
        const FieldStatistics field = build_field(c);
        const auto slots = slots_for(c, field, mean_channel, realization);
        return plan_dict(solve_convex(c, slots, field, c.harvest.model(parse_variant(assumed)),
                                      SolverOptions::from(c.solver)));
      },
      py::arg("scenario"), py::arg("assumed") = "L", py::arg("mean_channel") = false, py::arg("realization") = 0);

  m.def(
      "replay",
      [](const std::string& scenario, const Eigen::MatrixXd& p, const Eigen::MatrixXd& q, const std::string& actual,
         bool mean_channel, std::uint64_t realization) {
        const ScenarioConfig c = parse(scenario);
        const FieldStatistics field = build_field(c);
        const auto slots = slots_for(c, field, mean_channel, realization);
        AllocationPlan plan;
        plan.p = p;
        plan.q = q;
        const PlanEvaluation e = evaluate_plan(plan, c, slots, field, c.harvest.model(parse_variant(actual)));
        py::dict d = plan_dict(e.repaired);
        d["mean_distortion"] = e.mean_distortion;
        return d;
      },
      py::arg("scenario"), py::arg("p"), py::arg("q"), py::arg("actual") = "L", py::arg("mean_channel") = false,
      py::arg("realization") = 0);

  m.def("signal_power", [](const std::string& scenario) {
    const ScenarioConfig c = parse(scenario);
    return signal_power(c, build_field(c));
  });

  m.def(
      "sweep",
      [](const std::string& scenario, const std::vector<double>& budgets, const std::vector<std::string>& labels,
         int realizations) {
        std::vector<ScenarioLabel> parsed;
        for (const auto& l : labels) {
          parsed.push_back(parse_label(l));
          if (parsed.back().solver != SolverKind::Opt) throw ValidationError("sweep: only OPT labels are bound here");
        }
        SweepOptions opt;
        opt.realizations = realizations;
        py::list rows;
        for (const auto& r : sweep_budget(parse(scenario), budgets, parsed, opt)) {
          py::dict d;
          d["label"] = r.label.str();
          d["budget_w"] = r.budget;
          d["normalized_distortion"] = r.normalized_distortion;
          d["realizations"] = r.realizations;
          d["std_error"] = r.std_error;
          rows.append(d);
        }
        return rows;
      },
      py::arg("scenario"), py::arg("budgets"), py::arg("labels"), py::arg("realizations") = 1);
}
