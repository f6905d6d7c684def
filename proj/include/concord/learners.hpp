#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "concord/core_model.hpp"
#include "concord/json_util.hpp"
#include "concord/matrix.hpp"

namespace concord {

enum class LearnerKind { knn, forest, table };
enum class Task { classification, regression };

const char* to_string(LearnerKind kind) noexcept;
const char* to_string(Task task) noexcept;

/// Hyperparameters for one built-in learner. Only the fields of `kind` are used.
struct LearnerConfig {
  LearnerKind kind = LearnerKind::forest;
  // knn
  int k = 5;
  // forest
  int trees = 25;
  int max_depth = -1;  // negative: grow until pure or min_leaf
  int min_leaf = 1;
  double feature_fraction = 0.0;  // <= 0: sqrt(p) features per split
  bool bootstrap = true;
  std::uint64_t seed = 0;
  // table: fields forming the lookup key ("action", "outcome", "group" or feature names)
  std::vector<std::string> table_keys;

  static LearnerConfig knn(int k);
  static LearnerConfig forest(int trees, int max_depth, std::uint64_t seed = 0);
  static LearnerConfig table(std::vector<std::string> keys);

  std::string label() const;
  friend bool operator==(const LearnerConfig&, const LearnerConfig&) = default;
};

json to_json(const LearnerConfig& config);
LearnerConfig learner_config_from_json(const JsonCursor& cursor);

/// k in {1,3,5,7}.
std::vector<LearnerConfig> default_knn_grid();
/// trees in {25,100} x depth in {4,8,unlimited}.
std::vector<LearnerConfig> default_forest_grid(std::uint64_t seed = 0);

enum class OutcomeInput { none, one_hot, scalar };

/// Dense input encoding: features, then the group code, then one-hot action, then the
/// outcome (one-hot class or scalar value).
struct InputLayout {
  std::vector<std::string> feature_names;
  bool has_group = false;
  std::size_t n_actions = 0;
  OutcomeInput outcome = OutcomeInput::none;
  std::size_t n_outcomes = 0;

  std::size_t width() const noexcept;
  std::vector<double> encode(const Context& context, std::optional<std::size_t> action = std::nullopt,
                             std::optional<double> outcome = std::nullopt) const;
  void encode_into(std::span<double> out, const Context& context, std::optional<std::size_t> action,
                   std::optional<double> outcome) const;
  /// Logical value of a named field in an encoded row: a feature value, the group code,
  /// or the action / outcome index.
  double field_value(std::span<const double> row, const std::string& field) const;
  bool has_field(const std::string& field) const;

  friend bool operator==(const InputLayout&, const InputLayout&) = default;
};

json to_json(const InputLayout& layout);
InputLayout input_layout_from_json(const JsonCursor& cursor);

namespace detail {

struct KnnState {
  std::vector<double> mean;
  std::vector<double> scale;
  Matrix inputs;  // standardized
  std::vector<double> targets;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int value = -1;  // leaf: index into Tree::values
};

struct Tree {
  std::vector<TreeNode> nodes;
  std::vector<std::vector<double>> values;
};

struct ForestState {
  std::vector<Tree> trees;
};

struct TableState {
  std::map<std::string, std::vector<double>> entries;
};

}  // namespace detail

/// A fitted (or empty) k-NN, random-forest-lite or lookup-table model over encoded rows.
class Learner {
 public:
  Learner() = default;

  static Learner fit(const LearnerConfig& config, Task task, const InputLayout& layout, std::size_t n_classes,
                     const Matrix& inputs, std::span<const double> targets);

  bool fitted() const noexcept { return !std::holds_alternative<std::monostate>(state_); }
  Task task() const noexcept { return task_; }
  const LearnerConfig& config() const noexcept { return config_; }
  const InputLayout& layout() const noexcept { return layout_; }
  std::size_t n_classes() const noexcept { return n_classes_; }

  /// Classification: probability vector over classes.
  std::vector<double> predict_distribution(std::span<const double> row) const;
  /// Regression: point prediction.
  double predict_value(std::span<const double> row) const;
  /// Regression: per-member predictions (one per tree or neighbor) whose mean is predict_value.
  std::vector<double> predict_members(std::span<const double> row) const;

  json to_json() const;
  static Learner from_json(const JsonCursor& cursor);

 private:
  void require_fitted() const;
  std::string table_key(std::span<const double> row) const;

  LearnerConfig config_;
  Task task_ = Task::regression;
  InputLayout layout_;
  std::size_t n_classes_ = 0;
  std::variant<std::monostate, detail::KnnState, detail::ForestState, detail::TableState> state_;
};

/// Held-out evaluation summary for a fitted model. `heldout_error` estimates the expected
/// approximation error: MAE for regression, mean (1 - p(true class)) for classification.
struct ModelReport {
  double heldout_error = 0.0;
  std::size_t heldout_rows = 0;
  std::size_t heldout_skipped = 0;  // table lookups with no entry
  LearnerConfig chosen;
  std::size_t grid_size = 0;
  std::vector<double> grid_errors;
  double fit_seconds = 0.0;
  double predict_seconds = 0.0;
  bool degenerate = false;
  std::string warning;
};

json to_json(const ModelReport& report);

/// f(o | x, a): distribution over outcome classes, or over bins for continuous outcomes.
class OutcomePredictor {
 public:
  OutcomePredictor() = default;
  OutcomePredictor(Learner learner, OutcomeSpace outcomes, std::size_t n_actions);

  bool fitted() const noexcept { return learner_.fitted(); }
  const Learner& learner() const noexcept { return learner_; }
  const std::optional<OutcomeSpace>& outcomes() const noexcept { return outcomes_; }
  std::size_t n_actions() const noexcept { return n_actions_; }

  std::vector<double> distribution(const Context& context, std::size_t action) const;
  /// |A| x |O| row-stochastic matrix.
  Matrix distribution_matrix(const Context& context) const;
  /// Expected outcome value: regression mean, or sum_k p_k * k for discrete outcomes.
  double expected_outcome(const Context& context, std::size_t action) const;

 private:
  Learner learner_;
  std::optional<OutcomeSpace> outcomes_;
  std::size_t n_actions_ = 0;
};

json to_json(const OutcomePredictor& predictor);
OutcomePredictor outcome_predictor_from_json(const json& doc);

/// q_i(x, a, o) clamped to [0,1].
class RewardModel {
 public:
  RewardModel() = default;
  RewardModel(std::string actor, Learner learner, OutcomeSpace outcomes);

  bool fitted() const noexcept { return learner_.fitted(); }
  const std::string& actor() const noexcept { return actor_; }
  const Learner& learner() const noexcept { return learner_; }
  const std::optional<OutcomeSpace>& outcomes() const noexcept { return outcomes_; }

  /// `outcome` is a class index (discrete) or an outcome value (continuous).
  double predict(const Context& context, std::size_t action, double outcome) const;

 private:
  std::string actor_;
  Learner learner_;
  std::optional<OutcomeSpace> outcomes_;
};

json to_json(const RewardModel& model);
RewardModel reward_model_from_json(const json& doc);

struct OutcomeModelConfig {
  std::vector<LearnerConfig> grid{LearnerConfig::forest(25, 8)};
  double holdout_fraction = 0.2;
  std::uint64_t seed = 0;
};

struct FittedOutcomeModel {
  OutcomePredictor predictor;
  ModelReport report;
};

struct FittedRewardModel {
  RewardModel model;
  ModelReport report;
};

InputLayout outcome_input_layout(const Schema& schema);
InputLayout reward_input_layout(const Schema& schema);

FittedOutcomeModel fit_outcome_model(const Dataset& dataset, const OutcomeModelConfig& config);

FittedRewardModel fit_reward_model(const AugmentedDataset& augmented, const std::string& actor,
                                   std::span<const LearnerConfig> grid, std::uint64_t seed = 0,
                                   double holdout_fraction = 0.2);

/// Q_i(x) with rows over actions and columns over outcome classes (or bin midpoints).
PredictedRewardMatrix predict_reward_matrix(const RewardModel& model, const Context& context, std::size_t n_actions);

/// Two-model conditional treatment effect estimator: action 1 is treated, action 0 control.
class CateModel {
 public:
  CateModel(Learner treated, Learner control) : treated_(std::move(treated)), control_(std::move(control)) {}

  double treated_outcome(const Context& context) const;
  double control_outcome(const Context& context) const;
  double effect(const Context& context) const { return treated_outcome(context) - control_outcome(context); }

  const Learner& treated() const noexcept { return treated_; }
  const Learner& control() const noexcept { return control_; }

 private:
  Learner treated_;
  Learner control_;
};

CateModel fit_cate_tlearner(const Dataset& dataset, const LearnerConfig& config);

}  // namespace concord
