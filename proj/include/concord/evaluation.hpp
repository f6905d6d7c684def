#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "concord/core_model.hpp"
#include "concord/json_util.hpp"
#include "concord/learners.hpp"
#include "concord/matrix.hpp"
#include "concord/strategies.hpp"

namespace concord {

enum class Orientation { higher_better, lower_better };

const char* to_string(Orientation o) noexcept;

/// Per-context data a metric may read. `decisions` is T x |A|, one action distribution per row.
struct MetricInput {
  const Matrix& decisions;
  /// Realized outcome per context (class index or continuous value).
  std::span<const double> outcomes;
  /// Group code per context; -1 when unknown.
  std::span<const int> groups;
  /// Predicted expected outcome per context and action (T x |A|), when available.
  const Matrix* predicted = nullptr;
  /// Ground-truth expected rewards, when available.
  const RewardTensor* true_rewards = nullptr;
};

struct Metric {
  std::string name;
  Orientation orientation = Orientation::higher_better;
  int gamma = 1;  // 1 averages the kernel, 0 sums it
  double default_weight = 1.0;
  std::function<double(const MetricInput&)> evaluate;
};

/// Builds a metric from a per-context kernel Theta(t, p_t) aggregated by sum or mean.
Metric kernel_metric(std::string name, Orientation orientation, int gamma,
                     std::function<double(const MetricInput&, std::size_t, std::span<const double>)> kernel,
                     double default_weight = 1.0);

/// Probability of the action the oracle map assigns to the realized outcome.
Metric accuracy_metric(std::vector<std::size_t> oracle_map);
/// Max pairwise gap across groups of the mean positive-action weight sum_a p_a w_a.
Metric demographic_parity_metric(std::vector<double> positive_weight);
/// Mean over contexts of sum_a p_a * mean_i R_true[x,i,a].
Metric mean_welfare_metric();

double compute_raw_metric(const Metric& metric, const MetricInput& input);

struct Anchor {
  double lo = 0.0;
  double hi = 0.0;
  friend bool operator==(const Anchor&, const Anchor&) = default;
};

inline constexpr double kDegenerateSpread = 1e-12;

Anchor anchor_of(std::span<const double> raw);
double normalize_with(double raw, const Anchor& anchor, Orientation orientation);
std::vector<double> normalize_scores(std::span<const double> raw, Orientation orientation);

/// normalized[h][d]: metric h, strategy d. Weights must lie on the simplex.
std::vector<double> composite_score(const std::vector<std::vector<double>>& normalized, std::span<const double> weights);

/// Uniform over metrics with a positive default weight.
std::vector<double> default_weights(std::span<const Metric> metrics);
void validate_weights(std::span<const double> weights, std::size_t n_metrics);

struct MetricReport {
  std::vector<std::string> strategies;
  std::vector<std::string> metrics;
  std::vector<Orientation> orientations;
  /// raw[h][d], normalized[h][d]
  std::vector<std::vector<double>> raw;
  std::vector<std::vector<double>> normalized;
  std::vector<Anchor> anchors;
  std::vector<double> weights;
  std::vector<double> composite;
};

/// Validation-split data for one fold: everything strategies and metrics consume.
struct FoldData {
  std::vector<std::size_t> rows;  // dataset row indices
  RewardTensor expected;          // contexts x actors x actions
  std::vector<Matrix> outcome_distributions;
  std::vector<double> outcomes;
  std::vector<std::size_t> outcome_bins;
  std::vector<int> groups;
  Matrix predicted;  // T x |A| expected outcome under f
};

struct FoldResult {
  FoldData data;
  std::vector<Matrix> decisions;  // one T x |A| matrix per strategy
  MetricReport report;
};

std::vector<Matrix> run_strategies(const FoldData& data, std::span<const Strategy> strategies);

MetricReport score_strategies(const FoldData& data, std::span<const Strategy> strategies,
                              const std::vector<Matrix>& decisions, std::span<const Metric> metrics,
                              std::span<const double> weights, const RewardTensor* true_rewards = nullptr);

struct CvConfig {
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  std::vector<LearnerConfig> outcome_grid{LearnerConfig::forest(25, 8)};
  std::vector<LearnerConfig> reward_grid{LearnerConfig::forest(25, 8)};
  double holdout_fraction = 0.2;
  /// Explicit fold id per row; overrides stratified assignment when set.
  std::optional<std::vector<std::size_t>> fold_assignment;
};

struct SelectionResult {
  std::size_t winner = 0;
  std::string winner_name;
  std::vector<std::string> strategies;
  std::vector<double> mean_composite;
  std::vector<std::vector<double>> fold_composites;  // [fold][strategy]
  std::vector<std::size_t> fold_assignment;
  std::uint64_t seed = 0;
  std::vector<FoldResult> folds;
  std::vector<std::vector<ModelReport>> model_reports;  // [fold][outcome, actors...]
};

/// Stratified on the outcome class for discrete outcomes, shuffled otherwise.
std::vector<std::size_t> assign_folds(const Dataset& dataset, std::size_t k, std::uint64_t seed);

struct FittedModels {
  OutcomePredictor outcome;
  std::vector<RewardModel> rewards;
  std::vector<ModelReport> reports;
};

FittedModels fit_models(const AugmentedDataset& train, const CvConfig& config, std::uint64_t seed);

FoldData build_fold_data(const Dataset& dataset, std::span<const std::size_t> rows, const OutcomePredictor& outcome,
                         std::span<const RewardModel> rewards);

/// Expected reward matrix of one context under fitted models.
ExpectedRewardMatrix expected_rewards(const OutcomePredictor& outcome, std::span<const RewardModel> rewards,
                                      const Context& context, Matrix* distribution_out = nullptr);

SelectionResult cross_validate_select(const AugmentedDataset& data, std::span<const Strategy> strategies,
                                      std::span<const Metric> metrics, std::span<const double> weights,
                                      const CvConfig& config);

/// Winner of mean composites; ties go to the earlier strategy.
std::size_t argmax_first(std::span<const double> values);

struct CostModel {
  double actors = 0, actions = 0, strategies = 0, metrics = 0, grid = 0, validation = 0;
  double c_train = 1, c_inf = 1;
  double offline = 0;
  double online_preselected = 0;
  double online_all = 0;
};

CostModel estimate_overhead(double actors, double actions, double strategies, double metrics, double grid,
                            double validation, double c_train = 1.0, double c_inf = 1.0);

json to_json(const CostModel& model);
json to_json(const MetricReport& report);

}  // namespace concord
