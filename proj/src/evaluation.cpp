#include "concord/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "concord/error.hpp"
#include "concord/rng.hpp"

namespace concord {

const char* to_string(Orientation o) noexcept { return o == Orientation::higher_better ? "higher_better" : "lower_better"; }

Metric kernel_metric(std::string name, Orientation orientation, int gamma,
                     std::function<double(const MetricInput&, std::size_t, std::span<const double>)> kernel,
                     double default_weight) {
  if (gamma != 0 && gamma != 1) throw ParameterError("metric aggregation must be 0 (sum) or 1 (mean)");
  Metric m;
  m.name = std::move(name);
  m.orientation = orientation;
  m.gamma = gamma;
  m.default_weight = default_weight;
  m.evaluate = [gamma, kernel = std::move(kernel)](const MetricInput& in) {
    double acc = 0.0;
    for (std::size_t t = 0; t < in.decisions.rows(); ++t) acc += kernel(in, t, in.decisions.row(t));
    if (gamma == 1 && in.decisions.rows() > 0) acc /= static_cast<double>(in.decisions.rows());
    return acc;
  };
  return m;
}

Metric accuracy_metric(std::vector<std::size_t> oracle_map) {
  return kernel_metric("Accuracy", Orientation::higher_better, 1,
                       [map = std::move(oracle_map)](const MetricInput& in, std::size_t t, std::span<const double> p) {
                         const auto o = static_cast<std::size_t>(std::llround(in.outcomes[t]));
                         return p[map.at(o)];
                       });
}

Metric demographic_parity_metric(std::vector<double> positive_weight) {
  Metric m;
  m.name = "Demographic_Parity";
  m.orientation = Orientation::lower_better;
  m.gamma = 1;
  m.evaluate = [w = std::move(positive_weight)](const MetricInput& in) {
    std::map<int, std::pair<double, double>> rate;
    for (std::size_t t = 0; t < in.decisions.rows(); ++t) {
      const int g = t < in.groups.size() ? in.groups[t] : -1;
      if (g < 0) throw ConfigurationError("demographic parity requires a group attribute for every context");
      const auto p = in.decisions.row(t);
      double pos = 0.0;
      for (std::size_t a = 0; a < p.size(); ++a) pos += p[a] * w.at(a);
      rate[g].first += pos;
      rate[g].second += 1.0;
    }
    if (rate.empty() && in.decisions.rows() > 0) throw ConfigurationError("demographic parity requires a group attribute");
    double lo = 0.0, hi = 0.0;
    bool first = true;
    for (const auto& [g, r] : rate) {
      const double v = r.first / r.second;
      if (first) lo = hi = v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      first = false;
    }
    return hi - lo;
  };
  return m;
}

Metric mean_welfare_metric() {
  return kernel_metric("Mean_Welfare", Orientation::higher_better, 1,
                       [](const MetricInput& in, std::size_t t, std::span<const double> p) {
                         if (!in.true_rewards) throw ConfigurationError("Mean_Welfare needs ground-truth rewards");
                         const auto& r = *in.true_rewards;
                         double acc = 0.0;
                         for (std::size_t a = 0; a < p.size(); ++a) {
                           double mean = 0.0;
                           for (std::size_t i = 0; i < r.actors(); ++i) mean += r(t, i, a);
                           acc += p[a] * mean / static_cast<double>(r.actors());
                         }
                         return acc;
                       });
}

double compute_raw_metric(const Metric& metric, const MetricInput& input) {
  if (input.outcomes.size() != input.decisions.rows()) throw DimensionError("decisions and outcomes are not aligned");
  const double v = metric.evaluate(input);
  if (!std::isfinite(v)) throw ValidationError("metric '" + metric.name + "' produced a non-finite value");
  return v;
}

Anchor anchor_of(std::span<const double> raw) {
  if (raw.empty()) throw DimensionError("cannot normalize an empty score list");
  const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
  return {*lo, *hi};
}

double normalize_with(double raw, const Anchor& anchor, Orientation orientation) {
  const double spread = anchor.hi - anchor.lo;
  if (spread < kDegenerateSpread) return 1.0;
  const double z = (raw - anchor.lo) / spread;
  return orientation == Orientation::higher_better ? z : 1.0 - z;
}

std::vector<double> normalize_scores(std::span<const double> raw, Orientation orientation) {
  const auto anchor = anchor_of(raw);
  std::vector<double> out;
  out.reserve(raw.size());
  for (double r : raw) out.push_back(normalize_with(r, anchor, orientation));
  return out;
}

void validate_weights(std::span<const double> weights, std::size_t n_metrics) {
  if (weights.size() != n_metrics) {
    throw ParameterError("expected " + std::to_string(n_metrics) + " metric weights, got " + std::to_string(weights.size()));
  }
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ParameterError("metric weights must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ParameterError("metric weights must sum to 1, got " + format_double(sum));
}

std::vector<double> composite_score(const std::vector<std::vector<double>>& normalized, std::span<const double> weights) {
  validate_weights(weights, normalized.size());
  const std::size_t n = normalized.empty() ? 0 : normalized.front().size();
  std::vector<double> out(n, 0.0);
  for (std::size_t h = 0; h < normalized.size(); ++h) {
    if (normalized[h].size() != n) throw DimensionError("ragged normalized score table");
    for (std::size_t d = 0; d < n; ++d) out[d] += weights[h] * normalized[h][d];
  }
  return out;
}

std::vector<double> default_weights(std::span<const Metric> metrics) {
  double total = 0.0;
  for (const auto& m : metrics) total += m.default_weight > 0 ? 1.0 : 0.0;
  if (total == 0.0) throw ConfigurationError("no metric carries weight");
  std::vector<double> w;
  for (const auto& m : metrics) w.push_back(m.default_weight > 0 ? 1.0 / total : 0.0);
  return w;
}

std::size_t argmax_first(std::span<const double> values) {
  if (values.empty()) throw DimensionError("argmax of an empty list");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

// ---------------------------------------------------------------------------------------

std::vector<Matrix> run_strategies(const FoldData& data, std::span<const Strategy> strategies) {
  const std::size_t n = data.expected.contexts();
  const std::size_t k = data.expected.actions();
  std::vector<Matrix> out;
  for (const auto& s : strategies) {
    Matrix d(n, k);
    for (std::size_t t = 0; t < n; ++t) {
      const auto e = data.expected.matrix(t);
      DecisionInput in{e, t < data.outcome_distributions.size() ? &data.outcome_distributions[t] : nullptr,
                       t < data.outcome_bins.size() ? std::optional<std::size_t>(data.outcome_bins[t]) : std::nullopt};
      const auto p = decide(s, in);
      std::copy(p.begin(), p.end(), d.row(t).begin());
    }
    out.push_back(std::move(d));
  }
  return out;
}

MetricReport score_strategies(const FoldData& data, std::span<const Strategy> strategies,
                              const std::vector<Matrix>& decisions, std::span<const Metric> metrics,
                              std::span<const double> weights, const RewardTensor* true_rewards) {
  if (decisions.size() != strategies.size()) throw DimensionError("one decision matrix per strategy is required");
  MetricReport r;
  for (const auto& s : strategies) r.strategies.push_back(s.name);
  for (const auto& m : metrics) {
    r.metrics.push_back(m.name);
    r.orientations.push_back(m.orientation);
  }
  r.weights.assign(weights.begin(), weights.end());
  validate_weights(r.weights, metrics.size());
  for (const auto& m : metrics) {
    std::vector<double> raw;
    for (const auto& d : decisions) {
      MetricInput in{d, data.outcomes, data.groups, data.predicted.empty() ? nullptr : &data.predicted, true_rewards};
      raw.push_back(compute_raw_metric(m, in));
    }
    r.anchors.push_back(anchor_of(raw));
    r.normalized.push_back(normalize_scores(raw, m.orientation));
    r.raw.push_back(std::move(raw));
  }
  r.composite = composite_score(r.normalized, r.weights);
  return r;
}

// ---------------------------------------------------------------------------------------

std::vector<std::size_t> assign_folds(const Dataset& dataset, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ConfigurationError("cross-validation needs at least 2 folds");
  const std::size_t n = dataset.size();
  if (n < k) throw ConfigurationError("dataset has fewer rows than folds");
  Rng rng = make_rng(seed, "folds");
  std::vector<std::size_t> fold(n, 0);
  if (dataset.schema().outcomes.is_discrete()) {
    std::map<std::size_t, std::vector<std::size_t>> by_class;
    for (std::size_t t = 0; t < n; ++t) by_class[static_cast<std::size_t>(dataset.row(t).outcome)].push_back(t);
    std::size_t next = 0;
    for (auto& [cls, rows] : by_class) {
      if (rows.size() < k) {
        throw ConfigurationError("outcome class " + std::to_string(cls) + " has " + std::to_string(rows.size()) +
                                 " rows, too few to stratify into " + std::to_string(k) + " folds");
      }
      std::shuffle(rows.begin(), rows.end(), rng);
      for (auto t : rows) fold[t] = next++ % k;
    }
  } else {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t j = 0; j < n; ++j) fold[perm[j]] = j % k;
  }
  return fold;
}

FittedModels fit_models(const AugmentedDataset& train, const CvConfig& config, std::uint64_t seed) {
  FittedModels m;
  OutcomeModelConfig oc;
  oc.grid = config.outcome_grid;
  oc.holdout_fraction = config.holdout_fraction;
  oc.seed = seed;
  auto fitted = fit_outcome_model(train.base(), oc);
  m.outcome = std::move(fitted.predictor);
  m.reports.push_back(std::move(fitted.report));
  for (const auto& actor : train.actors().labels()) {
    auto r = fit_reward_model(train, actor, config.reward_grid, seed, config.holdout_fraction);
    m.rewards.push_back(std::move(r.model));
    m.reports.push_back(std::move(r.report));
  }
  return m;
}

ExpectedRewardMatrix expected_rewards(const OutcomePredictor& outcome, std::span<const RewardModel> rewards,
                                      const Context& context, Matrix* distribution_out) {
  Matrix f = outcome.distribution_matrix(context);
  std::vector<PredictedRewardMatrix> q;
  q.reserve(rewards.size());
  for (const auto& r : rewards) q.push_back(predict_reward_matrix(r, context, outcome.n_actions()));
  auto e = build_expected_reward_matrix(f, q);
  if (distribution_out) *distribution_out = std::move(f);
  return e;
}

FoldData build_fold_data(const Dataset& dataset, std::span<const std::size_t> rows, const OutcomePredictor& outcome,
                         std::span<const RewardModel> rewards) {
  const auto& schema = dataset.schema();
  const std::size_t k = schema.actions.size();
  FoldData fd;
  fd.rows.assign(rows.begin(), rows.end());
  fd.expected = RewardTensor(rows.size(), rewards.size(), k);
  fd.predicted = Matrix(rows.size(), k);
  const auto values = schema.outcomes.midpoints();
  for (std::size_t t = 0; t < rows.size(); ++t) {
    const auto& obs = dataset.row(rows[t]);
    Matrix f;
    const auto e = expected_rewards(outcome, rewards, obs.context, &f);
    for (std::size_t i = 0; i < e.actors(); ++i) {
      for (std::size_t a = 0; a < k; ++a) fd.expected(t, i, a) = e(i, a);
    }
    for (std::size_t a = 0; a < k; ++a) {
      double acc = 0.0;
      for (std::size_t o = 0; o < f.cols(); ++o) acc += f(a, o) * values[o];
      fd.predicted(t, a) = acc;
    }
    fd.outcome_distributions.push_back(std::move(f));
    fd.outcomes.push_back(obs.outcome);
    fd.outcome_bins.push_back(schema.outcomes.bin_of(obs.outcome));
    fd.groups.push_back(obs.context.group ? *obs.context.group : -1);
  }
  return fd;
}

SelectionResult cross_validate_select(const AugmentedDataset& data, std::span<const Strategy> strategies,
                                      std::span<const Metric> metrics, std::span<const double> weights,
                                      const CvConfig& config) {
  const auto& base = data.base();
  const auto& schema = base.schema();
  validate_strategy_set(strategies, data.actors().size(), schema.actions.size(), schema.outcomes.size());
  if (metrics.empty()) throw ConfigurationError("at least one metric is required");
  validate_weights(weights, metrics.size());

  SelectionResult result;
  result.seed = config.seed;
  for (const auto& s : strategies) result.strategies.push_back(s.name);
  std::size_t k = config.folds;
  if (config.fold_assignment) {
    result.fold_assignment = *config.fold_assignment;
    if (result.fold_assignment.size() != base.size()) throw DimensionError("fold assignment length differs from the data");
    k = 1 + *std::max_element(result.fold_assignment.begin(), result.fold_assignment.end());
    if (k < 2) throw ConfigurationError("cross-validation needs at least 2 folds");
  } else {
    result.fold_assignment = assign_folds(base, k, config.seed);
  }

  result.mean_composite.assign(strategies.size(), 0.0);
  for (std::size_t fold = 0; fold < k; ++fold) {
    std::vector<std::size_t> train, valid;
    for (std::size_t t = 0; t < base.size(); ++t) (result.fold_assignment[t] == fold ? valid : train).push_back(t);
    if (train.empty() || valid.empty()) throw ConfigurationError("fold " + std::to_string(fold) + " is empty");
    const auto models = fit_models(data.subset(train), config, derive_seed(config.seed, "fold/" + std::to_string(fold)));
    FoldResult fr;
    fr.data = build_fold_data(base, valid, models.outcome, models.rewards);
    fr.decisions = run_strategies(fr.data, strategies);
    fr.report = score_strategies(fr.data, strategies, fr.decisions, metrics, weights);
    for (std::size_t d = 0; d < strategies.size(); ++d) result.mean_composite[d] += fr.report.composite[d];
    result.fold_composites.push_back(fr.report.composite);
    result.model_reports.push_back(models.reports);
    result.folds.push_back(std::move(fr));
  }
  for (double& c : result.mean_composite) c /= static_cast<double>(k);
  result.winner = argmax_first(result.mean_composite);
  result.winner_name = strategies[result.winner].name;
  return result;
}

// ---------------------------------------------------------------------------------------

CostModel estimate_overhead(double actors, double actions, double strategies, double metrics, double grid,
                            double validation, double c_train, double c_inf) {
  for (double v : {actors, actions, strategies, metrics, grid, validation, c_train, c_inf}) {
    if (!(v >= 0.0)) throw ParameterError("cost model sizes must be non-negative");
  }
  CostModel c{actors, actions, strategies, metrics, grid, validation, c_train, c_inf};
  c.offline = actors * (grid * c_train + validation * actions * (c_inf + strategies)) + validation * strategies * metrics;
  c.online_preselected = actions * actors * (c_inf + 1.0);
  c.online_all = actions * actors * (c_inf + strategies);
  return c;
}

json to_json(const CostModel& c) {
  return {{"actors", c.actors},       {"actions", c.actions},
          {"strategies", c.strategies}, {"metrics", c.metrics},
          {"grid", c.grid},           {"validation", c.validation},
          {"c_train", c.c_train},     {"c_inf", c.c_inf},
          {"offline", c.offline},     {"online_preselected", c.online_preselected},
          {"online_all", c.online_all}};
}

json to_json(const MetricReport& r) {
  json anchors = json::array();
  for (const auto& a : r.anchors) anchors.push_back({a.lo, a.hi});
  std::vector<std::string> orient;
  for (auto o : r.orientations) orient.push_back(to_string(o));
  return {{"strategies", r.strategies}, {"metrics", r.metrics}, {"orientations", orient},
          {"raw", r.raw},               {"normalized", r.normalized}, {"anchors", anchors},
          {"weights", r.weights},       {"composite", r.composite}};
}

}  // namespace concord
