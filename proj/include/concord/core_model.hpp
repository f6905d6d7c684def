#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "concord/matrix.hpp"

namespace concord {

/// Ordered, unique, non-empty list of identifiers with a name -> position index.
class LabelSet {
 public:
  std::size_t size() const noexcept { return labels_.size(); }
  const std::string& label(std::size_t i) const { return labels_.at(i); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  bool contains(std::string_view name) const;
  /// Throws LookupError when `name` is unknown.
  std::size_t index_of(std::string_view name) const;

  friend bool operator==(const LabelSet& a, const LabelSet& b) { return a.labels_ == b.labels_; }

 protected:
  LabelSet(std::vector<std::string> labels, std::string_view what);

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::size_t> index_;
};

class StakeholderSet : public LabelSet {
 public:
  explicit StakeholderSet(std::vector<std::string> actors) : LabelSet(std::move(actors), "stakeholder set") {}
};

class ActionSpace : public LabelSet {
 public:
  explicit ActionSpace(std::vector<std::string> actions) : LabelSet(std::move(actions), "action space") {}
};

/// Discrete outcome labels, or a continuous range discretized by strictly increasing bin edges.
class OutcomeSpace {
 public:
  static OutcomeSpace discrete(std::vector<std::string> labels);
  static OutcomeSpace continuous(std::vector<double> bin_edges);

  bool is_discrete() const noexcept { return discrete_; }
  /// Number of classes (discrete) or bins (continuous).
  std::size_t size() const noexcept;
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::vector<double>& bin_edges() const noexcept { return edges_; }
  std::vector<double> midpoints() const;
  /// Bin containing `value`; values outside the range land in the first/last bin.
  std::size_t bin_of(double value) const;
  /// Position of `label` among discrete labels.
  std::size_t index_of(std::string_view label) const;
  /// Representative outcome value of class/bin `k` (the class index, or the bin midpoint).
  double value_of(std::size_t k) const;
  /// Whether `value` is admissible as an observed outcome.
  bool admits(double value) const;

  friend bool operator==(const OutcomeSpace&, const OutcomeSpace&) = default;

 private:
  OutcomeSpace() = default;
  bool discrete_ = true;
  std::vector<std::string> labels_;
  std::vector<double> edges_;
};

struct Context {
  std::vector<double> features;
  std::optional<int> group;

  friend bool operator==(const Context&, const Context&) = default;
};

/// One logged (context, action, outcome) triplet. Discrete outcomes hold the class index.
struct Observation {
  Context context;
  std::size_t action = 0;
  double outcome = 0.0;

  friend bool operator==(const Observation&, const Observation&) = default;
};

struct Schema {
  std::vector<std::string> feature_names;
  ActionSpace actions;
  OutcomeSpace outcomes;
  /// Name of the protected-attribute column; empty when the data has no group attribute.
  std::string group_column;
  /// Actors whose `reward_<actor>` columns are expected. Empty for a plain dataset.
  std::vector<std::string> actors;

  bool has_group() const noexcept { return !group_column.empty(); }
};

class Dataset {
 public:
  Dataset(Schema schema, std::vector<Observation> rows);

  const Schema& schema() const noexcept { return schema_; }
  const std::vector<Observation>& rows() const noexcept { return rows_; }
  const Observation& row(std::size_t t) const { return rows_.at(t); }
  std::size_t size() const noexcept { return rows_.size(); }
  bool empty() const noexcept { return rows_.empty(); }

  Dataset subset(std::span<const std::size_t> indices) const;

 private:
  Schema schema_;
  std::vector<Observation> rows_;
};

/// Dataset plus one reward vector in [0,1]^|I| per row.
class AugmentedDataset {
 public:
  AugmentedDataset(Dataset base, StakeholderSet actors, std::vector<std::vector<double>> rewards);

  const Dataset& base() const noexcept { return base_; }
  const StakeholderSet& actors() const noexcept { return actors_; }
  const std::vector<std::vector<double>>& rewards() const noexcept { return rewards_; }
  double reward(std::size_t t, std::size_t actor) const { return rewards_.at(t).at(actor); }
  std::size_t size() const noexcept { return base_.size(); }

  AugmentedDataset subset(std::span<const std::size_t> indices) const;

 private:
  Dataset base_;
  StakeholderSet actors_;
  std::vector<std::vector<double>> rewards_;
};

/// Q_i(x): |A| x |O| predicted rewards of one actor.
struct PredictedRewardMatrix {
  std::string actor;
  Matrix values;
};

/// E(x): |I| x |A| expected rewards.
struct ExpectedRewardMatrix {
  Matrix values;

  std::size_t actors() const noexcept { return values.rows(); }
  std::size_t actions() const noexcept { return values.cols(); }
  double operator()(std::size_t i, std::size_t a) const { return values(i, a); }

  friend bool operator==(const ExpectedRewardMatrix&, const ExpectedRewardMatrix&) = default;
};

/// Stack of expected-reward matrices over a batch of contexts, indexed (x, i, a).
class RewardTensor {
 public:
  RewardTensor() = default;
  RewardTensor(std::size_t contexts, std::size_t actors, std::size_t actions, double fill = 0.0);
  static RewardTensor from_matrices(std::span<const ExpectedRewardMatrix> matrices);

  std::size_t contexts() const noexcept { return contexts_; }
  std::size_t actors() const noexcept { return actors_; }
  std::size_t actions() const noexcept { return actions_; }
  std::size_t flat_index(std::size_t x, std::size_t i, std::size_t a) const noexcept {
    return (x * actors_ + i) * actions_ + a;
  }

  double operator()(std::size_t x, std::size_t i, std::size_t a) const { return values_[flat_index(x, i, a)]; }
  double& operator()(std::size_t x, std::size_t i, std::size_t a) { return values_[flat_index(x, i, a)]; }

  ExpectedRewardMatrix matrix(std::size_t x) const;
  const std::vector<double>& values() const noexcept { return values_; }
  std::vector<double>& values() noexcept { return values_; }

  friend bool operator==(const RewardTensor&, const RewardTensor&) = default;

 private:
  std::size_t contexts_ = 0;
  std::size_t actors_ = 0;
  std::size_t actions_ = 0;
  std::vector<double> values_;
};

inline constexpr double kStochasticTolerance = 1e-9;
inline constexpr double kRenormalizeTolerance = 1e-6;

/// E_{i,a} = sum_o Q_i[a,o] f(o|x,a). Rows of `outcome_distribution` are per-action outcome
/// (or bin) masses; one reward matrix per actor, in actor order.
ExpectedRewardMatrix build_expected_reward_matrix(const Matrix& outcome_distribution,
                                                  std::span<const PredictedRewardMatrix> reward_matrices);

/// Clamps every entry into [mu, 1 - mu].
RewardTensor clip_to_tube(const RewardTensor& tensor, double mu);

/// Checks that `row` is a probability vector; renormalizes small float drift in place.
void validate_distribution(std::span<double> row, std::string_view what);

}  // namespace concord
