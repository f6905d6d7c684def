#include <doctest.h>

#include "concord/error.hpp"
#include "concord/evaluation.hpp"
#include "concord/scenarios.hpp"
#include "oracles.hpp"

using namespace concord;

namespace {

const Metric& find_metric(const std::vector<Metric>& ms, const std::string& name) {
  for (const auto& m : ms)
    if (m.name == name) return m;
  FAIL("missing metric " << name);
  return ms.front();
}

CvConfig quick_cv(std::size_t folds, std::uint64_t seed) {
  CvConfig cv;
  cv.folds = folds;
  cv.seed = seed;
  cv.outcome_grid = {LearnerConfig::forest(10, 6)};
  cv.reward_grid = {LearnerConfig::forest(10, 6)};
  return cv;
}

}  // namespace

TEST_CASE("normalization examples") {
  const std::vector<double> raw{0.2, 0.6, 1.0};
  const auto hi = normalize_scores(raw, Orientation::higher_better);
  const auto lo = normalize_scores(raw, Orientation::lower_better);
  const auto ref_hi = oracle::minmax(raw, false);
  const auto ref_lo = oracle::minmax(raw, true);
  for (std::size_t d = 0; d < 3; ++d) {
    CHECK(hi[d] == doctest::Approx(ref_hi[d]).epsilon(1e-15));
    CHECK(lo[d] == doctest::Approx(ref_lo[d]).epsilon(1e-15));
  }
  CHECK(hi[1] == doctest::Approx(0.5));
  CHECK(lo[0] == 1.0);
  for (double v : normalize_scores(std::vector<double>{0.3, 0.3, 0.3}, Orientation::lower_better)) CHECK(v == 1.0);
}

TEST_CASE("composite examples") {
  CHECK(composite_score({{0.25, 1.0}}, std::vector<double>{1.0}) == std::vector<double>{0.25, 1.0});
  CHECK(composite_score({{1.0}, {0.0}}, std::vector<double>{0.5, 0.5})[0] == 0.5);

  // accuracy / parity table for three strategies
  const std::vector<std::vector<double>> table{{1.0, 0.4, 0.0}, {0.0, 0.75, 1.0}};
  const auto c = composite_score(table, std::vector<double>{0.7, 0.3});
  const double hand[] = {0.7 * 1.0 + 0.3 * 0.0, 0.7 * 0.4 + 0.3 * 0.75, 0.7 * 0.0 + 0.3 * 1.0};
  for (std::size_t d = 0; d < 3; ++d) CHECK(std::abs(c[d] - hand[d]) <= 1e-12);

  CHECK_THROWS_AS(composite_score(table, std::vector<double>{0.7, 0.2}), ParameterError);
  CHECK_THROWS_AS(composite_score(table, std::vector<double>{1.2, -0.2}), ParameterError);
  CHECK_THROWS_AS(composite_score(table, std::vector<double>{1.0}), ParameterError);
}

TEST_CASE("cost model examples") {
  const auto zero = estimate_overhead(0, 0, 0, 0, 0, 0);
  CHECK(zero.offline == 0.0);
  CHECK(zero.online_preselected == 0.0);
  const auto c = estimate_overhead(3, 3, 8, 5, 10, 100);
  CHECK(c.offline == 12130.0);
  CHECK(c.online_preselected == 18.0);
  CHECK(c.online_all == 3 * 3 * 9);
  CHECK_THROWS_AS(estimate_overhead(-1, 3, 8, 5, 10, 100), ParameterError);
}

TEST_CASE("lending metrics on a fully repaid batch") {
  const auto metrics = case_metrics(ScenarioSpec{});
  Matrix grant(10, 3);
  for (std::size_t t = 0; t < 10; ++t) grant(t, lending::kGrant) = 1.0;
  const std::vector<double> outcomes(10, static_cast<double>(lending::kFully));
  const std::vector<int> groups{0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
  const MetricInput in{grant, outcomes, groups};
  CHECK(compute_raw_metric(find_metric(metrics, "Total_Profit"), in) == 1.0);
  CHECK(compute_raw_metric(find_metric(metrics, "Total_Loss"), in) == 0.0);
  CHECK(compute_raw_metric(find_metric(metrics, "Accuracy"), in) == 1.0);
  CHECK(compute_raw_metric(find_metric(metrics, "Demographic_Parity"), in) == 0.0);
  CHECK(compute_raw_metric(find_metric(metrics, "Precision"), in) == 1.0);
}

TEST_CASE("demographic parity needs groups") {
  const auto dp = demographic_parity_metric({1.0, 0.0});
  Matrix d(2, 2);
  d(0, 0) = 1.0;
  d(1, 1) = 1.0;
  const std::vector<double> outcomes{0, 0};
  const std::vector<int> missing{-1, -1};
  CHECK_THROWS_AS(compute_raw_metric(dp, {d, outcomes, missing}), ConfigurationError);
  const std::vector<int> groups{0, 1};
  CHECK(compute_raw_metric(dp, {d, outcomes, groups}) == 1.0);
}

TEST_CASE("stochastic decisions contribute expected kernel values") {
  const auto acc = accuracy_metric({0, 1});
  Matrix d(2, 2, 0.5);
  d(1, 0) = 0.2;
  d(1, 1) = 0.8;
  const std::vector<double> outcomes{0, 1};
  const std::vector<int> groups{0, 0};
  CHECK(compute_raw_metric(acc, {d, outcomes, groups}) == doctest::Approx(0.65));
}

TEST_CASE("fold assignment is stratified and seeded") {
  ScenarioSpec spec;
  spec.rows = 300;
  const auto gen = generate(spec);
  const auto a = assign_folds(gen.data.base(), 5, 11);
  CHECK(a == assign_folds(gen.data.base(), 5, 11));
  for (std::size_t f = 0; f < 5; ++f) {
    std::vector<int> per_class(3, 0);
    for (std::size_t t = 0; t < a.size(); ++t)
      if (a[t] == f) ++per_class[static_cast<std::size_t>(gen.data.base().row(t).outcome)];
    for (int c : per_class) CHECK(c > 0);
  }
  CHECK_THROWS_AS(assign_folds(gen.data.base(), 1, 0), ConfigurationError);
}

TEST_CASE("duplicate strategy ties and the earlier entry wins") {
  ScenarioSpec spec;
  spec.rows = 240;
  const auto gen = generate(spec);
  const std::vector<Strategy> strategies{Strategy::single_agent("Applicant", lending::kApplicant),
                                         Strategy::single_agent("Bank", lending::kBank),
                                         Strategy::single_agent("Bank_again", lending::kBank)};
  const auto metrics = case_metrics(spec);
  const auto w = default_weights(metrics);
  const auto r = cross_validate_select(gen.data, strategies, metrics, w, quick_cv(2, 1));
  CHECK(r.mean_composite[1] == r.mean_composite[2]);
  CHECK(r.winner != 2);
  CHECK(r.winner == argmax_first(r.mean_composite));
}

TEST_CASE("oracle is the accuracy upper bound") {
  ScenarioSpec spec;
  spec.rows = 300;
  spec.noise = 0.0;
  const auto gen = generate(spec);
  const auto strategies = default_strategies(spec);
  std::vector<Metric> metrics{accuracy_metric(lending::oracle_map())};
  const auto r = cross_validate_select(gen.data, strategies, metrics, std::vector<double>{1.0}, quick_cv(3, 2));
  CHECK(r.winner_name == "Oracle");
  for (const auto& fold : r.folds) {
    for (std::size_t d = 0; d < strategies.size(); ++d) CHECK(fold.report.raw[0][0] >= fold.report.raw[0][d]);
  }
}

TEST_CASE("cross-validation is seed deterministic") {
  ScenarioSpec spec;
  spec.rows = 200;
  const auto gen = generate(spec);
  const auto strategies = default_strategies(spec);
  const auto metrics = case_metrics(spec);
  const auto w = default_weights(metrics);
  const auto a = cross_validate_select(gen.data, strategies, metrics, w, quick_cv(2, 5));
  const auto b = cross_validate_select(gen.data, strategies, metrics, w, quick_cv(2, 5));
  CHECK(a.fold_assignment == b.fold_assignment);
  CHECK(a.mean_composite == b.mean_composite);
  CHECK(a.winner == b.winner);
}
