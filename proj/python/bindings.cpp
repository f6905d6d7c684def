#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "concord/cli.hpp"

namespace py = pybind11;
using namespace concord;

namespace {

json parse(const std::string& text) { return json::parse(text); }

ExpectedRewardMatrix to_matrix(const std::vector<std::vector<double>>& rows) {
  return ExpectedRewardMatrix{Matrix::from_rows(rows)};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "concord engine bindings; documents cross the boundary as JSON text";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<ConfigurationError>(m, "ConfigurationError", base.ptr());
  py::register_exception<ParameterError>(m, "ParameterError", base.ptr());
  py::register_exception<FeasibilityError>(m, "FeasibilityError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<LookupError>(m, "LookupError", base.ptr());

  m.def("generate", [](const std::string& spec, const std::string& csv) {
    const auto r = cmd_generate(scenario_spec_from_json(parse(spec)), csv);
    return json{{"csv", r.csv.string()}, {"truth", r.truth.string()}, {"rows", r.rows}}.dump();
  }, py::arg("spec"), py::arg("csv"));

  m.def("select", [](const std::string& config, const std::string& base_dir, bool write) {
    const auto rc = run_config_from_json(parse(config), base_dir);
    const auto out = write ? cmd_select(rc) : run_selection(rc);
    return json{{"winner", out.selection.winner_name},
                {"bundle", out.bundle},
                {"store", out.store},
                {"summary", out.summary},
                {"table", out.table}}
        .dump();
  }, py::arg("config"), py::arg("base_dir") = "", py::arg("write") = false);

  m.def("recommend", [](const std::string& store, const std::string& contexts) {
    std::istringstream in(contexts);
    return json(cmd_recommend(parse(store), in)).dump();
  }, py::arg("store"), py::arg("contexts"));

  m.def("certify", [](const std::string& bundle, const std::string& config) {
    return cmd_certify(parse(bundle), certify_config_from_json(parse(config))).dump();
  }, py::arg("bundle"), py::arg("config"));

  m.def("format_certificate", [](const std::string& certificate) { return format_certificate(parse(certificate)); });

  m.def("score_actions", [](const std::string& phi, const std::vector<std::vector<double>>& e) {
    return score_actions(phi_from_string(phi), to_matrix(e));
  }, py::arg("phi"), py::arg("expected"));

  m.def("apply_rule", [](const std::string& phi, const std::vector<std::vector<double>>& e, double tau) {
    CompromiseRule rule{phi_from_string(phi), tau > 0 ? Selector::softmax : Selector::argmax, {}};
    rule.params.tau = tau > 0 ? tau : 1.0;
    return apply_rule(rule, to_matrix(e));
  }, py::arg("phi"), py::arg("expected"), py::arg("tau") = 0.0);

  m.def("normalize_scores", [](const std::vector<double>& raw, bool lower_better) {
    return normalize_scores(raw, lower_better ? Orientation::lower_better : Orientation::higher_better);
  }, py::arg("raw"), py::arg("lower_better") = false);

  m.def("composite_score", [](const std::vector<std::vector<double>>& normalized, const std::vector<double>& weights) {
    return composite_score(normalized, weights);
  }, py::arg("normalized"), py::arg("weights"));

  m.def("optimal_temperature", &optimal_temperature, py::arg("delta"), py::arg("beta"), py::arg("kappa"), py::arg("mu"));

  m.def("estimate_overhead", [](double actors, double actions, double strategies, double metrics, double grid,
                                double validation, double c_train, double c_inf) {
    return to_json(estimate_overhead(actors, actions, strategies, metrics, grid, validation, c_train, c_inf)).dump();
  }, py::arg("actors"), py::arg("actions"), py::arg("strategies"), py::arg("metrics"), py::arg("grid"),
        py::arg("validation"), py::arg("c_train") = 1.0, py::arg("c_inf") = 1.0);
}
