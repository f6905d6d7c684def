#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "concord/csv_io.hpp"
#include "concord/error.hpp"
#include "concord/learners.hpp"
#include "concord/robustness.hpp"
#include "concord/scenarios.hpp"
#include "instances.hpp"
#include "oracles.hpp"

using namespace concord;

namespace {

constexpr int kTrials = 200;

ExpectedRewardMatrix random_e(std::mt19937_64& rng, std::size_t actors, std::size_t actions, double lo = 0.05,
                              double hi = 0.95) {
  return {Matrix::from_rows(oracle::random_matrix(rng, actors, actions, lo, hi))};
}

std::size_t sharp_choice(Phi phi, const ExpectedRewardMatrix& e) {
  const auto p = apply_rule(fixture::sharp_rule(phi), e);
  return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
}

Matrix row_stochastic(std::mt19937_64& rng, std::size_t r, std::size_t c) {
  auto m = oracle::random_matrix(rng, r, c, 0.0, 1.0);
  for (auto& row : m) {
    double s = 0;
    for (double v : row) s += v;
    for (double& v : row) v /= s;
  }
  return Matrix::from_rows(m);
}

}  // namespace

TEST_CASE("property: E is linear in each reward matrix and stays in [0,1]") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> w(0.0, 1.0);
  for (int trial = 0; trial < kTrials; ++trial) {
    const auto f = row_stochastic(rng, 3, 4);
    const auto q1 = Matrix::from_rows(oracle::random_matrix(rng, 3, 4, 0.0, 1.0));
    const auto q2 = Matrix::from_rows(oracle::random_matrix(rng, 3, 4, 0.0, 1.0));
    const double a = w(rng);
    Matrix mix(3, 4);
    for (std::size_t r = 0; r < 3; ++r)
      for (std::size_t c = 0; c < 4; ++c) mix(r, c) = a * q1(r, c) + (1 - a) * q2(r, c);
    const auto e1 = build_expected_reward_matrix(f, std::vector<PredictedRewardMatrix>{{"x", q1}});
    const auto e2 = build_expected_reward_matrix(f, std::vector<PredictedRewardMatrix>{{"x", q2}});
    const auto em = build_expected_reward_matrix(f, std::vector<PredictedRewardMatrix>{{"x", mix}});
    for (std::size_t act = 0; act < 3; ++act) {
      CHECK(em(0, act) == doctest::Approx(a * e1(0, act) + (1 - a) * e2(0, act)).epsilon(1e-12));
      CHECK(em(0, act) >= 0.0);
      CHECK(em(0, act) <= 1.0);
    }
  }
}

TEST_CASE("property: tube clipping is idempotent and monotone") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-0.2, 1.2);
  for (int trial = 0; trial < kTrials; ++trial) {
    RewardTensor t(2, 2, 3), s(2, 2, 3);
    for (std::size_t k = 0; k < t.values().size(); ++k) {
      t.values()[k] = u(rng);
      s.values()[k] = t.values()[k] + std::abs(u(rng));
    }
    const auto ct = clip_to_tube(t, 0.05);
    const auto cs = clip_to_tube(s, 0.05);
    CHECK(clip_to_tube(ct, 0.05) == ct);
    for (std::size_t k = 0; k < t.values().size(); ++k) {
      CHECK(ct.values()[k] <= cs.values()[k]);
      CHECK(ct.values()[k] >= 0.05);
      CHECK(ct.values()[k] <= 0.95);
    }
  }
}

TEST_CASE("property: normalization lands in [0,1] and preserves order") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int trial = 0; trial < kTrials; ++trial) {
    std::vector<double> raw(6);
    for (double& v : raw) v = u(rng);
    for (auto o : {Orientation::higher_better, Orientation::lower_better}) {
      const auto n = normalize_scores(raw, o);
      const auto ref = oracle::minmax(raw, o == Orientation::lower_better);
      for (std::size_t d = 0; d < raw.size(); ++d) {
        CHECK(n[d] >= 0.0);
        CHECK(n[d] <= 1.0);
        CHECK(n[d] == doctest::Approx(ref[d]).epsilon(1e-12));
        CHECK(std::count(n.begin(), n.end(), 1.0) >= 1);
        CHECK(std::count(n.begin(), n.end(), 0.0) >= 1);
        for (std::size_t e = 0; e < raw.size(); ++e) {
          if (raw[d] < raw[e]) CHECK((o == Orientation::higher_better ? n[d] <= n[e] : n[d] >= n[e]));
        }
      }
    }
  }
  const std::vector<double> flat{0.3, 0.3, 0.3};
  for (double v : normalize_scores(flat, Orientation::higher_better)) CHECK(v == 1.0);
}

TEST_CASE("property: composite is monotone in each normalized score") {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < kTrials; ++trial) {
    std::vector<std::vector<double>> n(3, std::vector<double>(4));
    for (auto& row : n)
      for (double& v : row) v = u(rng);
    std::vector<double> w{u(rng), u(rng), u(rng)};
    const double s = w[0] + w[1] + w[2];
    for (double& v : w) v /= s;
    const auto base = composite_score(n, w);
    auto bumped = n;
    bumped[trial % 3][trial % 4] = std::min(1.0, bumped[trial % 3][trial % 4] + 0.1);
    const auto up = composite_score(bumped, w);
    CHECK(up[trial % 4] >= base[trial % 4]);
    for (double c : base) {
      CHECK(c >= -1e-12);
      CHECK(c <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("property: adding a dominated strategy keeps a winner that tops every metric") {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < kTrials; ++trial) {
    std::vector<std::vector<double>> raw(3, std::vector<double>(4));
    for (auto& row : raw) {
      for (double& v : row) v = u(rng);
      row[2] = *std::max_element(row.begin(), row.end()) + 0.1;
    }
    const std::vector<double> w{0.4, 0.3, 0.3};
    auto winner_of = [&](const std::vector<std::vector<double>>& r) {
      std::vector<std::vector<double>> n;
      for (const auto& row : r) n.push_back(normalize_scores(row, Orientation::higher_better));
      return argmax_first(composite_score(n, w));
    };
    CHECK(winner_of(raw) == 2);
    auto extended = raw;
    for (auto& row : extended) row.push_back(*std::min_element(row.begin(), row.end()) - u(rng));
    CHECK(winner_of(extended) == 2);
  }
}

TEST_CASE("property: NSW and PF agree on positive gains") {
  std::mt19937_64 rng(16);
  for (int trial = 0; trial < kTrials; ++trial) {
    const auto e = random_e(rng, 3, 4);
    CHECK(sharp_choice(Phi::nash_social_welfare, e) == sharp_choice(Phi::proportional_fairness, e));
  }
}

TEST_CASE("property: maximin guarantees the best worst-off reward") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < kTrials; ++trial) {
    const auto rows = oracle::random_matrix(rng, 3, 5, 0.0, 1.0);
    const ExpectedRewardMatrix e{Matrix::from_rows(rows)};
    const auto choice = sharp_choice(Phi::maximin, e);
    std::vector<double> mins;
    for (std::size_t a = 0; a < 5; ++a) mins.push_back(oracle::column_min(rows, a));
    CHECK(mins[choice] == *std::max_element(mins.begin(), mins.end()));
    CHECK(choice == oracle::first_argmax(mins));
  }
}

TEST_CASE("property: sharp rules never pick a strictly Pareto-dominated action") {
  std::mt19937_64 rng(18);
  for (int trial = 0; trial < kTrials; ++trial) {
    auto rows = oracle::random_matrix(rng, 3, 4, 0.1, 0.8);
    // Action 3 is strictly dominated by action 0.
    for (auto& row : rows) row[3] = row[0] - 0.05;
    const ExpectedRewardMatrix e{Matrix::from_rows(rows)};
    for (const auto& [name, phi] : fixture::all_rules()) CHECK_MESSAGE(sharp_choice(phi, e) != 3, name);
  }
}

TEST_CASE("property: maximin is invariant under a shared increasing transform") {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < kTrials; ++trial) {
    const auto rows = oracle::random_matrix(rng, 3, 4, 0.05, 0.95);
    auto cubed = rows;
    for (auto& row : cubed)
      for (double& v : row) v = v * v * v;
    CHECK(sharp_choice(Phi::maximin, {Matrix::from_rows(rows)}) ==
          sharp_choice(Phi::maximin, {Matrix::from_rows(cubed)}));
  }
}

TEST_CASE("property: utilitarian choice ignores per-actor constant shifts") {
  std::mt19937_64 rng(20);
  std::uniform_real_distribution<double> shift(-0.04, 0.04);
  for (int trial = 0; trial < kTrials; ++trial) {
    const auto rows = oracle::random_matrix(rng, 3, 4, 0.05, 0.95);
    auto shifted = rows;
    for (auto& row : shifted) {
      const double c = shift(rng);
      for (double& v : row) v += c;
    }
    const auto a = sharp_choice(Phi::utilitarian_sum, {Matrix::from_rows(rows)});
    const auto b = sharp_choice(Phi::utilitarian_sum, {Matrix::from_rows(shifted)});
    CHECK(oracle::column_sum(rows, b) >= oracle::column_sum(rows, a) - 1e-9);
  }
}

TEST_CASE("property: softmax approaches argmax as tau shrinks and stays finite") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < kTrials; ++trial) {
    std::vector<double> s(4);
    for (double& v : s) v = u(rng);
    const auto sharp = select_sharp(s);
    double prev = 2.0;
    for (double tau : {10.0, 1.0, 0.1, 0.01, 0.001}) {
      const auto p = select_smooth(s, tau);
      const double tv = oracle::total_variation(p, sharp);
      CHECK(tv <= prev + 1e-12);
      prev = tv;
    }
    for (double tau : {1e-12, 1e12}) {
      for (double v : select_smooth(s, tau)) {
        CHECK(std::isfinite(v));
        CHECK(v >= 0.0);
      }
    }
    const std::vector<double> extreme{1e300, -1e300, 0.0};
    for (double v : select_smooth(extreme, 1e-6)) CHECK(std::isfinite(v));
  }
}

TEST_CASE("property: the lower bound decomposes exactly") {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 40; ++trial) {
    auto inst = fixture::random_instance(rng, 2, 2, 3, {0}, 0.05);
    const auto rule = fixture::sharp_rule(fixture::all_rules()[trial % 7].second);
    const auto grid = default_tau_grid();
    const auto k = estimate_constants(inst.tensor, rule, inst.model, inst.spec, grid, 100, trial);
    const auto c = robust_lower_bound(inst.tensor, rule, inst.model, inst.spec, 0.1, k);
    CHECK(std::abs(c.rlb - (c.smooth_score - c.gradient_term - c.curvature_term - c.bias_term)) <= 1e-12);
    CHECK(c.gradient_term >= 0.0);
    CHECK(c.curvature_term >= 0.0);
    CHECK(c.bias_term >= 0.0);
  }
}

TEST_CASE("property: the lower bound shrinks with the radius and with the coalition") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 30; ++trial) {
    auto inst = fixture::random_instance(rng, 2, 3, 3, {0}, 0.1);
    const auto rule = fixture::sharp_rule(fixture::all_rules()[trial % 7].second);
    const auto grid = default_tau_grid();
    const auto k = estimate_constants(inst.tensor, rule, inst.model, inst.spec, grid, 100, trial);
    double prev = std::numeric_limits<double>::infinity();
    for (double delta : {0.0, 0.02, 0.05, 0.1}) {
      auto spec = inst.spec;
      spec.delta = delta;
      const double rlb = robust_lower_bound(inst.tensor, rule, inst.model, spec, 0.1, k).rlb;
      CHECK(rlb <= prev + 1e-12);
      prev = rlb;
    }
    auto wide = inst.spec;
    wide.coalition = {0, 1};
    const double narrow_rlb = robust_lower_bound(inst.tensor, rule, inst.model, inst.spec, 0.1, k).rlb;
    const double wide_rlb = robust_lower_bound(inst.tensor, rule, inst.model, wide, 0.1, k).rlb;
    CHECK(wide_rlb <= narrow_rlb + 1e-12);
  }
}

TEST_CASE("property: learner predictions are valid distributions and rewards") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    ScenarioSpec spec;
    spec.rows = 300;
    spec.seed = seed;
    spec.noise = 0.2;
    const auto gen = generate(spec);
    OutcomeModelConfig oc;
    oc.grid = {LearnerConfig::forest(10, 6, seed), LearnerConfig::knn(5)};
    oc.seed = seed;
    const auto f = fit_outcome_model(gen.data.base(), oc);
    const std::vector<LearnerConfig> grid{LearnerConfig::knn(3), LearnerConfig::forest(10, 6, seed)};
    const auto q = fit_reward_model(gen.data, "Applicant", grid, seed);
    for (std::size_t t = 0; t < 30; ++t) {
      const auto& ctx = gen.data.base().row(t).context;
      const auto m = f.predictor.distribution_matrix(ctx);
      for (std::size_t a = 0; a < m.rows(); ++a) {
        double s = 0;
        for (std::size_t o = 0; o < m.cols(); ++o) {
          CHECK(m(a, o) >= 0.0);
          s += m(a, o);
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
      }
      const auto r = predict_reward_matrix(q.model, ctx, 3);
      for (std::size_t a = 0; a < r.values.rows(); ++a)
        for (std::size_t o = 0; o < r.values.cols(); ++o) {
          CHECK(r.values(a, o) >= 0.0);
          CHECK(r.values(a, o) <= 1.0);
        }
    }
  }
}

TEST_CASE("property: CSV write then ingest is the identity") {
  for (std::uint64_t seed : {5u, 6u, 7u}) {
    for (const char* name : {"lending", "healthcare"}) {
      ScenarioSpec spec;
      spec.name = name;
      spec.rows = 120;
      spec.seed = seed;
      spec.noise = 0.3;
      const auto gen = generate(spec);
      std::stringstream buf;
      write_csv(buf, gen.data);
      const auto back = ingest_csv(buf, gen.data.base().schema());
      REQUIRE(std::holds_alternative<AugmentedDataset>(back));
      const auto& a = std::get<AugmentedDataset>(back);
      CHECK(a.base().rows() == gen.data.base().rows());
      CHECK(a.rewards() == gen.data.rewards());
    }
  }
}
