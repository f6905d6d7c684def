#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "concord/cli.hpp"
#include "concord/error.hpp"

using namespace concord;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(CONCORD_TEST_TMP) / "unit" / name;
  fs::create_directories(p);
  return p;
}

json quick_run(std::size_t rows, std::uint64_t seed) {
  return {{"scenario", {{"scenario", "lending"}, {"rows", rows}, {"seed", seed}}},
          {"folds", 2},
          {"seed", seed},
          {"learners",
           {{"outcome", json::array({{{"kind", "forest"}, {"trees", 8}, {"max_depth", 6}}})},
            {"reward", json::array({{{"kind", "forest"}, {"trees", 8}, {"max_depth", 6}}})}}}};
}

json table_run() {
  return {{"scenario", {{"scenario", "lending"}, {"rows", 300}, {"seed", 4}}},
          {"folds", 2},
          {"strategies", {"single_agent:Bank"}},
          {"learners",
           {{"outcome", json::array({{{"kind", "table"}, {"keys", {"group", "action"}}}})},
            {"reward", json::array({{{"kind", "table"}, {"keys", {"group", "action", "outcome"}}}})}}}};
}

json context_of(const Observation& row) { return {{"features", row.context.features}, {"group", *row.context.group}}; }

}  // namespace

TEST_CASE("exit codes by error kind") {
  CHECK(exit_code(ErrorKind::validation) == kExitValidation);
  CHECK(exit_code(ErrorKind::configuration) == kExitValidation);
  CHECK(exit_code(ErrorKind::feasibility) == kExitInfeasible);
  CHECK(exit_code(ErrorKind::io) == kExitIo);
}

TEST_CASE("version checks refuse with a migration hint") {
  CHECK_NOTHROW(check_version(json{{"schema", "concord.bundle"}, {"version", 1}}, "concord.bundle", 1));
  try {
    check_version(json{{"schema", "concord.bundle"}, {"version", 7}}, "concord.bundle", 1);
    FAIL("expected a version error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("regenerate") != std::string::npos);
  }
  CHECK_THROWS_AS(check_version(json{{"schema", "concord.model_store"}, {"version", 1}}, "concord.bundle", 1),
                  ValidationError);
}

TEST_CASE("run configuration parsing") {
  auto doc = quick_run(100, 3);
  doc["data"] = "data.csv";
  doc["weights"] = {{"Accuracy", 1.0}};
  const auto rc = run_config_from_json(doc, "/tmp/base");
  CHECK(rc.cv.folds == 2);
  CHECK(rc.cv.seed == 3);
  CHECK(*rc.data == fs::path("/tmp/base/data.csv"));
  CHECK(rc.weights.at("Accuracy") == 1.0);
  CHECK(rc.cv.outcome_grid.front().trees == 8);
  const auto back = run_config_from_json(to_json(rc));
  CHECK(back.cv.reward_grid == rc.cv.reward_grid);

  auto unknown = doc;
  unknown["foldz"] = 3;
  CHECK_THROWS_AS(run_config_from_json(unknown), ValidationError);
}

TEST_CASE("option parsing") {
  CHECK_FALSE(parse_tau_policy("optimal").fixed);
  CHECK(*parse_tau_policy("fixed:0.25").fixed == 0.25);
  CHECK(to_string(parse_tau_policy("fixed:0.25")) == "fixed:0.25");
  CHECK_THROWS_AS(parse_tau_policy("fixed:-1"), ParameterError);
  CHECK_THROWS_AS(parse_tau_policy("warm"), ParameterError);

  CertifyConfig cc;
  parse_delta_option("0.01,0.05", cc);
  CHECK(cc.deltas == std::vector<double>{0.01, 0.05});
  parse_delta_option("auto:0.25", cc);
  CHECK(*cc.auto_fraction == 0.25);

  const auto w = parse_weights_option("Accuracy=0.5,Total_Profit=0.5");
  CHECK(w.size() == 2);
  CHECK(w.at("Total_Profit") == 0.5);

  const auto perturbation = certify_config_from_json(
      json{{"perturbation", {{"coalition", {"Bank"}}, {"delta", {0.02}}, {"mu", 0.1}, {"tau", "fixed:0.1"}}}});
  CHECK(perturbation.coalition == std::vector<std::string>{"Bank"});
  CHECK(perturbation.mu == 0.1);
  CHECK(*perturbation.tau.fixed == 0.1);
}

TEST_CASE("generate writes the CSV and the ground-truth sidecar") {
  const auto dir = scratch("generate");
  ScenarioSpec spec;
  spec.rows = 1000;
  const auto r = cmd_generate(spec, dir / "lending.csv");
  CHECK(r.rows == 1000);
  CHECK(fs::exists(r.csv));
  CHECK(fs::exists(r.truth));
  CHECK(read_json_file(r.truth).at("schema") == "concord.truth");
  try {
    scenario_spec_from_json(json{{"scenario", "lending"}, {"rows", "many"}});
    FAIL("expected a schema error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("/rows") != std::string::npos);
  }
}

TEST_CASE("select: bundle carries one normalized grid per fold") {
  auto doc = quick_run(240, 1);
  doc["strategies"] = {"Oracle",         "Outcome_Maxim", "Single_Bank", "Single_Applicant",
                       "Single_Regulator", "Utilitarian", "Maximin",     "NBS"};
  const auto out = run_selection(run_config_from_json(doc));
  const auto& folds = out.bundle.at("folds");
  REQUIRE(folds.size() == 2);
  for (const auto& f : folds) {
    const auto& grid = f.at("report").at("normalized");
    REQUIRE(grid.size() == 7);
    for (const auto& row : grid) CHECK(row.size() == 8);
  }
  CHECK(out.bundle.at("schema") == "concord.bundle");
  CHECK(out.store.at("schema") == "concord.model_store");
  CHECK(out.table.find("*") != std::string::npos);
}

TEST_CASE("select: a singleton strategy set selects it") {
  auto doc = quick_run(200, 2);
  doc["strategies"] = {"single_agent:bank"};
  const auto out = run_selection(run_config_from_json(doc));
  CHECK(out.selection.winner == 0);
  CHECK(out.selection.winner_name == "single_agent:bank");
  CHECK(out.selection.strategies.size() == 1);
}

TEST_CASE("select: missing reward columns name the actor") {
  const auto dir = scratch("missing_rewards");
  ScenarioSpec spec;
  spec.rows = 50;
  const auto gen = generate(spec);
  const auto schema = scenario_schema(spec);
  {
    std::ofstream out(dir / "partial.csv");
    for (const auto& f : schema.feature_names) out << f << ',';
    out << "group,action,outcome,reward_Bank,reward_Applicant\n";
    for (std::size_t t = 0; t < gen.data.size(); ++t) {
      const auto& r = gen.data.base().row(t);
      for (double v : r.context.features) out << format_double(v) << ',';
      out << *r.context.group << ',' << r.action << ',' << r.outcome << ',' << format_double(gen.data.reward(t, 0)) << ','
          << format_double(gen.data.reward(t, 1)) << '\n';
    }
  }
  auto doc = quick_run(50, 0);
  doc["data"] = (dir / "partial.csv").string();
  try {
    run_selection(run_config_from_json(doc));
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("reward_Regulator") != std::string::npos);
  }
}

TEST_CASE("recommend with table predictors reproduces the hand computation") {
  const auto out = run_selection(run_config_from_json(table_run()));
  ScenarioSpec spec;
  spec.rows = 300;
  spec.seed = 4;
  const auto gen = generate(spec);
  const auto& base = gen.data.base();

  // f(o | group, action) and q_i(group, action, outcome) as plain frequency and mean tables.
  std::map<std::pair<int, std::size_t>, std::vector<double>> f;
  std::map<std::tuple<int, std::size_t, std::size_t>, std::pair<std::vector<double>, double>> q;
  for (std::size_t t = 0; t < base.size(); ++t) {
    const auto& r = base.row(t);
    const int g = *r.context.group;
    const auto o = static_cast<std::size_t>(r.outcome);
    auto& freq = f[{g, r.action}];
    freq.resize(4, 0.0);
    freq[o] += 1.0;
    freq[3] += 1.0;
    auto& cell = q[{g, r.action, o}];
    cell.first.resize(3, 0.0);
    for (std::size_t i = 0; i < 3; ++i) cell.first[i] += gen.data.reward(t, i);
    cell.second += 1.0;
  }

  const auto& row = base.row(0);
  const int g = *row.context.group;
  const auto rec = recommend(out.store, context_of(row));
  double best = -1.0;
  std::size_t best_a = 0;
  for (std::size_t a = 0; a < 3; ++a) {
    const auto& freq = f.at({g, a});
    for (std::size_t i = 0; i < 3; ++i) {
      double e = 0.0;
      for (std::size_t o = 0; o < 3; ++o) {
        const double p = freq[o] / freq[3];
        if (p == 0.0) continue;
        const auto& cell = q.at({g, a, o});
        e += p * cell.first[i] / cell.second;
      }
      CHECK(std::abs(rec.at("E")[i][a].get<double>() - e) <= 1e-12);
      if (i == 0 && e > best) {
        best = e;
        best_a = a;
      }
    }
  }
  CHECK(rec.at("action_index") == best_a);
  CHECK(rec.at("strategy") == "single_agent:Bank");
}

TEST_CASE("recommend ignores features the tables do not use and keeps batch order") {
  const auto out = run_selection(run_config_from_json(table_run()));
  ScenarioSpec spec;
  spec.rows = 300;
  spec.seed = 4;
  const auto gen = generate(spec);
  auto a = context_of(gen.data.base().row(0));
  auto b = a;
  b["features"][0] = a["features"][0].get<double>() + 123.0;
  const auto ra = recommend(out.store, a);
  const auto rb = recommend(out.store, b);
  CHECK(ra.at("E") == rb.at("E"));
  CHECK(ra.at("action") == rb.at("action"));

  std::stringstream lines;
  for (std::size_t t = 0; t < 3; ++t) lines << context_of(gen.data.base().row(t)).dump() << '\n';
  const auto records = cmd_recommend(out.store, lines);
  REQUIRE(records.size() == 3);
  for (std::size_t t = 0; t < 3; ++t) {
    CHECK(records[t].at("index") == t);
    CHECK(records[t] == recommend(out.store, context_of(gen.data.base().row(t)), t));
  }
  CHECK_THROWS_AS(recommend(out.store, json{{"features", {1.0, 2.0}}, {"group", 0}}), ValidationError);
}

TEST_CASE("certify at zero radius leaves only the bias term") {
  const auto out = run_selection(run_config_from_json(quick_run(200, 5)));
  CertifyConfig cc;
  cc.coalition = {"Bank"};
  cc.deltas = {0.0};
  cc.tau.fixed = 0.05;
  cc.samples = 100;
  cc.probe_samples = 50;
  const auto cert = cmd_certify(out.bundle, cc);
  CHECK(cert.at("schema") == "concord.certificate");
  const auto& rules = cert.at("grid")[0].at("rules");
  CHECK(rules.size() == 7);
  for (const auto& r : rules) {
    const auto& fixed = r.at("at_fixed_tau");
    const double kappa = fixed.at("constants").at("kappa_hat").get<double>();
    CHECK(fixed.at("gradient_term") == 0.0);
    CHECK(fixed.at("curvature_term") == 0.0);
    CHECK(fixed.at("bias_term").get<double>() == doctest::Approx(kappa * 0.05));
    CHECK(fixed.at("rlb").get<double>() ==
          fixed.at("smooth_score").get<double>() - fixed.at("bias_term").get<double>());
  }
  CHECK_FALSE(format_certificate(cert).empty());
}

TEST_CASE("certify rejects an infeasible radius and an unknown coalition") {
  const auto out = run_selection(run_config_from_json(quick_run(200, 6)));
  CertifyConfig cc;
  cc.coalition = {"Bank"};
  cc.deltas = {0.6};
  CHECK_THROWS_AS(cmd_certify(out.bundle, cc), FeasibilityError);
  cc.deltas = {0.01};
  cc.coalition = {"Nobody"};
  CHECK_THROWS(cmd_certify(out.bundle, cc));
}
