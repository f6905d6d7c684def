#include <doctest.h>

#include <random>

#include "concord/error.hpp"
#include "concord/learners.hpp"
#include "concord/scenarios.hpp"

using namespace concord;

namespace {

InputLayout plain_layout(std::size_t p) {
  InputLayout l;
  for (std::size_t j = 0; j < p; ++j) l.feature_names.push_back("x" + std::to_string(j));
  return l;
}

Schema line_schema() {
  return Schema{{"x0"}, ActionSpace({"a", "b"}), OutcomeSpace::discrete({"lo", "hi"}), "", {"P"}};
}

// Every (x, action, outcome) cell of a small lattice, three copies each, reward a fixed function of all three.
AugmentedDataset lattice_data() {
  std::vector<Observation> rows;
  std::vector<std::vector<double>> rewards;
  for (int copy = 0; copy < 3; ++copy)
    for (int xi = 0; xi <= 4; ++xi)
      for (std::size_t a = 0; a < 2; ++a)
        for (int o = 0; o < 2; ++o) {
          const double x = 0.25 * xi;
          rows.push_back({Context{{x}, std::nullopt}, a, static_cast<double>(o)});
          rewards.push_back({0.1 + 0.5 * x * (a == 0 ? 1.0 : 0.4) + 0.2 * o});
        }
  return AugmentedDataset(Dataset(line_schema(), rows), StakeholderSet({"P"}), rewards);
}

}  // namespace

TEST_CASE("1-NN at a training point returns that point's class") {
  const auto layout = plain_layout(2);
  const auto x = Matrix::from_rows({{0, 0}, {1, 0}, {0, 1}, {1, 1}});
  const std::vector<double> y{0, 2, 1, 2};
  const auto l = Learner::fit(LearnerConfig::knn(1), Task::classification, layout, 3, x, y);
  for (std::size_t t = 0; t < 4; ++t) {
    auto expect = std::vector<double>(3, 0.0);
    expect[static_cast<std::size_t>(y[t])] = 1.0;
    CHECK(l.predict_distribution(x.row(t)) == expect);
  }
}

TEST_CASE("a depth-0 tree predicts the empirical class frequencies") {
  auto cfg = LearnerConfig::forest(1, 0);
  cfg.bootstrap = false;
  Matrix x(10, 1);
  std::vector<double> y;
  for (std::size_t t = 0; t < 10; ++t) {
    x(t, 0) = static_cast<double>(t);
    y.push_back(t < 4 ? 0.0 : 1.0);
  }
  const auto l = Learner::fit(cfg, Task::classification, plain_layout(1), 2, x, y);
  const auto p = l.predict_distribution(std::vector<double>{3.0});
  CHECK(p[0] == doctest::Approx(0.4));
  CHECK(p[1] == doctest::Approx(0.6));
}

TEST_CASE("table learner: JSON round trip and unknown keys") {
  const auto layout = plain_layout(1);
  const auto x = Matrix::from_rows({{0}, {0}, {1}});
  const std::vector<double> y{0.2, 0.4, 0.9};
  const auto l = Learner::fit(LearnerConfig::table({"x0"}), Task::regression, layout, 0, x, y);
  CHECK(l.predict_value(std::vector<double>{0.0}) == doctest::Approx(0.3));
  const json doc = l.to_json();
  const auto back = Learner::from_json(JsonCursor(doc));
  CHECK(back.predict_value(std::vector<double>{1.0}) == 0.9);
  CHECK_THROWS_AS(back.predict_value(std::vector<double>{2.0}), LookupError);
  CHECK_THROWS_AS(Learner().predict_value(std::vector<double>{0.0}), StateError);
}

TEST_CASE("constant reward is learned exactly") {
  ScenarioSpec spec;
  spec.rows = 150;
  const auto gen = generate(spec);
  std::vector<std::vector<double>> rewards(gen.data.size(), std::vector<double>(3, 0.5));
  const AugmentedDataset constant(gen.data.base(), gen.data.actors(), rewards);
  for (const auto& cfg : {LearnerConfig::knn(3), LearnerConfig::forest(5, 4)}) {
    const auto fit = fit_reward_model(constant, "Bank", std::vector<LearnerConfig>{cfg});
    CHECK(fit.report.heldout_error == 0.0);
    CHECK(fit.report.degenerate);
    const auto q = predict_reward_matrix(fit.model, gen.data.base().row(0).context, 3);
    for (double v : q.values.data()) CHECK(v == 0.5);
  }
  CHECK_THROWS_AS(fit_reward_model(constant, "Bank", std::vector<LearnerConfig>{}), ParameterError);
}

TEST_CASE("grid search prefers exact nearest neighbours") {
  const auto data = lattice_data();
  const std::vector<LearnerConfig> grid{LearnerConfig::knn(1), LearnerConfig::knn(3)};
  const auto fit = fit_reward_model(data, "P", grid, 4);
  CHECK(fit.report.grid_errors[0] == 0.0);
  CHECK(fit.report.grid_errors[1] > 0.0);
  CHECK(fit.report.chosen.k == 1);
}

TEST_CASE("grid ties go to the earlier configuration") {
  const auto data = lattice_data();
  const std::vector<LearnerConfig> grid{LearnerConfig::knn(1), LearnerConfig::knn(1)};
  auto second = grid;
  second[1].seed = 9;
  const auto fit = fit_reward_model(data, "P", second, 4);
  CHECK(fit.report.chosen == second[0]);
}

TEST_CASE("forest recovers an action-outcome reward") {
  ScenarioSpec spec;
  spec.rows = 1500;
  spec.noise = 0.0;
  const auto gen = generate(spec);
  const auto fit =
      fit_reward_model(gen.data, "Bank", std::vector<LearnerConfig>{LearnerConfig::forest(25, -1, 3)}, 3);
  CHECK(fit.report.heldout_error <= 0.02);
}

TEST_CASE("noise-free lending reward matrices match the generating tables") {
  ScenarioSpec spec;
  spec.rows = 2000;
  spec.noise = 0.0;
  const auto gen = generate(spec);
  const auto& base = gen.data.base();
  auto full = LearnerConfig::forest(25, -1, 1);
  full.feature_fraction = 1.0;
  const std::vector<LearnerConfig> grid{full};
  for (std::size_t i = 0; i < 3; ++i) {
    const auto fit = fit_reward_model(gen.data, gen.data.actors().label(i), grid, 1);
    for (std::size_t t = 0; t < 40; ++t) {
      const auto& ctx = base.row(t).context;
      const auto q = predict_reward_matrix(fit.model, ctx, 3);
      for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t o = 0; o < 3; ++o) {
          const double truth = lending::reward(i, a, o, ctx.group.value_or(0), spec.variant);
          CHECK(std::abs(q.values(a, o) - truth) <= 0.05);
          CHECK(q.values(a, o) >= 0.0);
          CHECK(q.values(a, o) <= 1.0);
        }
    }
  }
}

TEST_CASE("outcome distributions are stochastic") {
  ScenarioSpec spec;
  spec.rows = 400;
  const auto gen = generate(spec);
  OutcomeModelConfig cfg;
  cfg.grid = {LearnerConfig::forest(10, 6), LearnerConfig::knn(5)};
  const auto fit = fit_outcome_model(gen.data.base(), cfg);
  for (std::size_t t = 0; t < 50; ++t) {
    const auto f = fit.predictor.distribution_matrix(gen.data.base().row(t).context);
    for (std::size_t a = 0; a < f.rows(); ++a) {
      double s = 0.0;
      for (double p : f.row(a)) {
        CHECK(p >= 0.0);
        s += p;
      }
      CHECK(std::abs(s - 1.0) <= 1e-9);
    }
  }
}

namespace {

Dataset treatment_data(std::size_t n, double effect, std::uint64_t seed) {
  Schema s{{"x0"}, ActionSpace({"control", "treat"}), OutcomeSpace::continuous({-10, 10}), "", {}};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Observation> rows;
  for (std::size_t t = 0; t < n; ++t) {
    const double x = u(rng);
    const std::size_t a = t % 2;
    rows.push_back({Context{{x}, std::nullopt}, a, effect * static_cast<double>(a) + x});
  }
  return Dataset(s, rows);
}

}  // namespace

TEST_CASE("T-learner recovers a constant effect") {
  const auto m = fit_cate_tlearner(treatment_data(800, 2.0, 1), LearnerConfig::forest(25, -1, 1));
  for (double x = 0.05; x < 1.0; x += 0.1) CHECK(std::abs(m.effect(Context{{x}, std::nullopt}) - 2.0) <= 0.1);
  const auto z = fit_cate_tlearner(treatment_data(800, 0.0, 2), LearnerConfig::forest(25, -1, 1));
  for (double x = 0.05; x < 1.0; x += 0.1) CHECK(std::abs(z.effect(Context{{x}, std::nullopt})) <= 0.1);
}

TEST_CASE("T-learner with one point per arm") {
  Schema s{{"x0"}, ActionSpace({"control", "treat"}), OutcomeSpace::continuous({-10, 10}), "", {}};
  const Dataset d(s, {{Context{{0.3}, std::nullopt}, 0, 1.5}, {Context{{0.7}, std::nullopt}, 1, 4.0}});
  const auto m = fit_cate_tlearner(d, LearnerConfig::knn(1));
  CHECK(m.effect(Context{{0.1}, std::nullopt}) == 2.5);
  const Dataset only(s, {{Context{{0.3}, std::nullopt}, 0, 1.5}});
  CHECK_THROWS_AS(fit_cate_tlearner(only, LearnerConfig::knn(1)), FitError);
}

TEST_CASE("serialized models predict identically; fixed seeds reproduce fits") {
  ScenarioSpec spec;
  spec.rows = 300;
  const auto gen = generate(spec);
  const std::vector<LearnerConfig> grid{LearnerConfig::forest(8, 5, 7)};
  const auto a = fit_reward_model(gen.data, "Regulator", grid, 7);
  const auto b = fit_reward_model(gen.data, "Regulator", grid, 7);
  const auto back = reward_model_from_json(to_json(a.model));
  OutcomeModelConfig oc;
  oc.grid = {LearnerConfig::knn(5)};
  const auto f = fit_outcome_model(gen.data.base(), oc);
  const auto f_back = outcome_predictor_from_json(to_json(f.predictor));
  for (std::size_t t = 0; t < 30; ++t) {
    const auto& ctx = gen.data.base().row(t).context;
    for (std::size_t act = 0; act < 3; ++act)
      for (std::size_t o = 0; o < 3; ++o) {
        const double v = a.model.predict(ctx, act, static_cast<double>(o));
        CHECK(v == b.model.predict(ctx, act, static_cast<double>(o)));
        CHECK(v == back.predict(ctx, act, static_cast<double>(o)));
      }
    CHECK(f.predictor.distribution_matrix(ctx) == f_back.distribution_matrix(ctx));
  }
}

namespace {

std::vector<double> training_mae_by_trees(bool bootstrap) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix x(300, 2);
  std::vector<double> y;
  for (std::size_t t = 0; t < 300; ++t) {
    x(t, 0) = u(rng);
    x(t, 1) = u(rng);
    y.push_back(x(t, 0) > 0.5 ? 1.0 : 0.0);
  }
  std::vector<double> out;
  for (int trees : {1, 5, 25}) {
    auto cfg = LearnerConfig::forest(trees, -1, 3);
    cfg.bootstrap = bootstrap;
    const auto l = Learner::fit(cfg, Task::regression, plain_layout(2), 0, x, y);
    double err = 0.0;
    for (std::size_t t = 0; t < 300; ++t) err += std::abs(l.predict_value(x.row(t)) - y[t]);
    out.push_back(err / 300.0);
  }
  return out;
}

}  // namespace

TEST_CASE("training error does not grow with more trees") {
  const auto err = training_mae_by_trees(false);
  CHECK(err[1] <= err[0]);
  CHECK(err[2] <= err[1]);
}

// With 0/1 labels and pure leaves the ensemble MAE is the mean of per-tree MAEs, so under
// bootstrap resampling it is only non-increasing in expectation.
TEST_CASE("training error does not grow with more bootstrap trees" * doctest::may_fail()) {
  const auto err = training_mae_by_trees(true);
  CHECK(err[1] <= err[0]);
  CHECK(err[2] <= err[1]);
}
