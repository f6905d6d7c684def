#include <doctest.h>

#include <sstream>

#include "concord/csv_io.hpp"
#include "concord/error.hpp"
#include "concord/scenarios.hpp"

using namespace concord;
using namespace concord::lending;

namespace {

std::string csv_bytes(const GeneratedScenario& g) {
  std::ostringstream out;
  write_csv(out, g.data);
  return out.str();
}

bool has_metric(const std::vector<Metric>& ms, const std::string& name) {
  for (const auto& m : ms)
    if (m.name == name) return true;
  return false;
}

}  // namespace

TEST_CASE("lending bank rewards at the table corners") {
  CHECK(reward(kBank, kGrant, kFully, 0, RewardVariant::balanced) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(reward(kBank, kGrant, kNotRepaid, 0, RewardVariant::balanced) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("lending reward orderings hold for every generated context at zero noise") {
  ScenarioSpec spec;
  spec.rows = 1000;
  spec.noise = 0.0;
  const auto g = generate(spec);
  for (std::size_t t = 0; t < g.data.size(); ++t) {
    const int grp = g.data.base().row(t).context.group.value_or(0);
    for (auto variant : {RewardVariant::balanced, RewardVariant::strictest}) {
      const auto r = [&](std::size_t i, std::size_t a, std::size_t o) { return reward(i, a, o, grp, variant); };
      CHECK(r(kApplicant, kNotGrant, kFully) < r(kApplicant, kGrant, kFully));
      CHECK(r(kBank, kGrant, kFully) > r(kBank, kGrant, kNotRepaid));
      CHECK(r(kBank, kGrant, kFully) >= r(kBank, kGrantLower, kFully));
    }
    CHECK(reward(kRegulator, kGrant, kFully, grp, RewardVariant::balanced) >
          reward(kRegulator, kGrant, kNotRepaid, grp, RewardVariant::balanced));
    // logged rewards equal the table at zero noise
    const auto& row = g.data.base().row(t);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(g.data.reward(t, i) ==
            doctest::Approx(reward(i, row.action, static_cast<std::size_t>(row.outcome), grp, spec.variant)));
    }
  }
}

TEST_CASE("strictest variant: the bank values approvals only under full repayment") {
  for (std::size_t o : {kPartially, kNotRepaid}) {
    CHECK(reward(kBank, kGrant, o, 0, RewardVariant::strictest) < reward(kBank, kNotGrant, o, 0, RewardVariant::strictest));
  }
  CHECK(reward(kBank, kGrant, kFully, 0, RewardVariant::strictest) >
        reward(kBank, kNotGrant, kFully, 0, RewardVariant::strictest));
  for (std::size_t o : {kFully, kPartially, kNotRepaid}) {
    CHECK(reward(kApplicant, kGrant, o, 0, RewardVariant::strictest) == 1.0);
  }
}

TEST_CASE("rewards stay in [0,1] for every noise amplitude") {
  for (double noise : {0.0, 0.1, 0.3, 0.5}) {
    ScenarioSpec spec;
    spec.rows = 300;
    spec.noise = noise;
    for (const char* name : {"lending", "healthcare"}) {
      spec.name = name;
      const auto g = generate(spec);
      for (const auto& r : g.data.rewards())
        for (double v : r) {
          CHECK(v >= 0.0);
          CHECK(v <= 1.0);
        }
    }
  }
  ScenarioSpec bad;
  bad.noise = 0.6;
  CHECK_THROWS_AS(generate(bad), ValidationError);
}

TEST_CASE("generation is seed deterministic") {
  ScenarioSpec spec;
  spec.rows = 200;
  spec.seed = 42;
  CHECK(csv_bytes(generate(spec)) == csv_bytes(generate(spec)));
  auto other = spec;
  other.seed = 43;
  CHECK(csv_bytes(generate(spec)) != csv_bytes(generate(other)));
  spec.name = "healthcare";
  CHECK(csv_bytes(generate(spec)) == csv_bytes(generate(spec)));
}

TEST_CASE("lending repayment base rate matches the configured rate") {
  ScenarioSpec spec;
  spec.rows = 5000;
  spec.seed = 1;
  const auto g = generate(spec);
  double fully = 0, n = 0;
  for (const auto& r : g.data.base().rows()) {
    if (r.action == kGrantLower) continue;
    n += 1;
    fully += r.outcome == kFully ? 1 : 0;
  }
  CHECK(std::abs(fully / n - spec.lending.full_repayment_rate) <= 0.02);
}

TEST_CASE("oracle map sends each outcome to its designated action") {
  CHECK(oracle_map() == std::vector<std::size_t>{kGrant, kGrantLower, kNotGrant});
}

TEST_CASE("healthcare: zero effect leaves the parent reward balanced across arms") {
  ScenarioSpec spec;
  spec.name = "healthcare";
  spec.rows = 2000;
  spec.healthcare.treatment_effect = 0.0;
  spec.healthcare.heterogeneous = false;
  const auto g = generate(spec);
  double sum[2] = {0, 0}, count[2] = {0, 0};
  for (std::size_t t = 0; t < g.data.size(); ++t) {
    const auto a = g.data.base().row(t).action;
    sum[a] += g.data.reward(t, healthcare::kParent);
    count[a] += 1;
  }
  CHECK(std::abs(sum[0] / count[0] - sum[1] / count[1]) <= 0.02);
}

TEST_CASE("healthcare: provider reward falls as treatment cost rises") {
  const auto edges = healthcare::default_bin_edges();
  HealthcareParams cheap, dear;
  cheap.treatment_cost = 0.05;
  dear.treatment_cost = 0.3;
  for (double y : {70.0, 95.0, 120.0}) {
    CHECK(healthcare::reward(healthcare::kProvider, healthcare::kTreat, y, 0, dear, edges) <
          healthcare::reward(healthcare::kProvider, healthcare::kTreat, y, 0, cheap, edges));
  }
}

TEST_CASE("healthcare: constant effect is stored as the oracle effect") {
  ScenarioSpec spec;
  spec.name = "healthcare";
  spec.rows = 100;
  spec.healthcare.treatment_effect = 2.0;
  spec.healthcare.heterogeneous = false;
  const auto g = generate(spec);
  REQUIRE(g.true_effect.size() == 100);
  for (double e : g.true_effect) CHECK(e == 2.0);
  CHECK(g.data.base().schema().feature_names.size() == healthcare::kFeatures);
}

TEST_CASE("case metrics") {
  ScenarioSpec lending_spec;
  const auto lm = case_metrics(lending_spec);
  CHECK(lm.size() == 7);
  CHECK(has_metric(lm, "Accuracy"));
  CHECK(has_metric(lm, "Demographic_Parity"));
  ScenarioSpec health;
  health.name = "healthcare";
  const auto hm = case_metrics(health);
  CHECK(has_metric(hm, "Avg_outcome_difference"));
  CHECK(has_metric(hm, "Cost_Effectiveness"));
  ScenarioSpec unknown;
  unknown.name = "weather";
  CHECK_THROWS_AS(case_metrics(unknown), ConfigurationError);
}

TEST_CASE("scenario spec JSON") {
  const json doc = {{"scenario", "lending"}, {"rows", 50}, {"seed", 3}, {"noise", 0.1}, {"variant", "strictest"}};
  const auto spec = scenario_spec_from_json(doc);
  CHECK(spec.rows == 50);
  CHECK(spec.variant == RewardVariant::strictest);
  const auto back = scenario_spec_from_json(to_json(spec));
  CHECK(back.seed == 3);
  CHECK(back.noise == 0.1);
  CHECK_THROWS(scenario_spec_from_json(json{{"scenario", "lending"}, {"noise", 0.9}}));
  CHECK_THROWS(scenario_spec_from_json(json{{"scenario", "weather"}}));
}
