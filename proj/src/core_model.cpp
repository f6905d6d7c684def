#include "concord/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "concord/error.hpp"

namespace concord {

LabelSet::LabelSet(std::vector<std::string> labels, std::string_view what) : labels_(std::move(labels)) {
  if (labels_.empty()) throw ValidationError(std::string(what) + " must not be empty");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i].empty()) throw ValidationError(std::string(what) + " contains an empty identifier");
    if (!index_.emplace(labels_[i], i).second) {
      throw ValidationError(std::string(what) + " contains duplicate identifier '" + labels_[i] + "'");
    }
  }
}

bool LabelSet::contains(std::string_view name) const { return index_.count(std::string(name)) > 0; }

std::size_t LabelSet::index_of(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw LookupError("unknown identifier '" + std::string(name) + "'");
  return it->second;
}

OutcomeSpace OutcomeSpace::discrete(std::vector<std::string> labels) {
  if (labels.empty()) throw ValidationError("outcome space must not be empty");
  std::unordered_set<std::string> seen;
  for (const auto& l : labels) {
    if (!seen.insert(l).second) throw ValidationError("duplicate outcome label '" + l + "'");
  }
  OutcomeSpace s;
  s.discrete_ = true;
  s.labels_ = std::move(labels);
  return s;
}

OutcomeSpace OutcomeSpace::continuous(std::vector<double> bin_edges) {
  if (bin_edges.size() < 2) throw ValidationError("continuous outcome space needs at least 2 bin edges");
  for (std::size_t k = 0; k < bin_edges.size(); ++k) {
    if (!std::isfinite(bin_edges[k])) throw ValidationError("bin edges must be finite");
    if (k > 0 && !(bin_edges[k] > bin_edges[k - 1])) throw ValidationError("bin edges must be strictly increasing");
  }
  OutcomeSpace s;
  s.discrete_ = false;
  s.edges_ = std::move(bin_edges);
  return s;
}

std::size_t OutcomeSpace::size() const noexcept { return discrete_ ? labels_.size() : edges_.size() - 1; }

std::vector<double> OutcomeSpace::midpoints() const {
  std::vector<double> mids;
  if (discrete_) {
    for (std::size_t k = 0; k < labels_.size(); ++k) mids.push_back(static_cast<double>(k));
    return mids;
  }
  for (std::size_t k = 0; k + 1 < edges_.size(); ++k) mids.push_back(0.5 * (edges_[k] + edges_[k + 1]));
  return mids;
}

std::size_t OutcomeSpace::bin_of(double value) const {
  if (discrete_) {
    const auto k = static_cast<long long>(std::llround(value));
    return static_cast<std::size_t>(std::clamp<long long>(k, 0, static_cast<long long>(labels_.size()) - 1));
  }
  auto it = std::upper_bound(edges_.begin(), edges_.end(), value);
  if (it == edges_.begin()) return 0;
  const auto k = static_cast<std::size_t>(std::distance(edges_.begin(), it)) - 1;
  return std::min(k, size() - 1);
}

std::size_t OutcomeSpace::index_of(std::string_view label) const {
  for (std::size_t k = 0; k < labels_.size(); ++k) {
    if (labels_[k] == label) return k;
  }
  throw LookupError("unknown outcome '" + std::string(label) + "'");
}

double OutcomeSpace::value_of(std::size_t k) const {
  if (discrete_) return static_cast<double>(k);
  return 0.5 * (edges_.at(k) + edges_.at(k + 1));
}

bool OutcomeSpace::admits(double value) const {
  if (!std::isfinite(value)) return false;
  if (!discrete_) return true;
  return value >= 0 && value < static_cast<double>(labels_.size()) && std::floor(value) == value;
}

Dataset::Dataset(Schema schema, std::vector<Observation> rows) : schema_(std::move(schema)), rows_(std::move(rows)) {
  const std::size_t width = schema_.feature_names.size();
  for (std::size_t t = 0; t < rows_.size(); ++t) {
    const auto& r = rows_[t];
    const std::string where = "row " + std::to_string(t);
    if (r.context.features.size() != width) {
      throw DimensionError(where + ": expected " + std::to_string(width) + " features, got " +
                           std::to_string(r.context.features.size()));
    }
    for (double v : r.context.features) {
      if (!std::isfinite(v)) throw ValidationError(where + ": non-finite feature value");
    }
    if (r.action >= schema_.actions.size()) throw ValidationError(where + ": action index out of range");
    if (!schema_.outcomes.admits(r.outcome)) throw ValidationError(where + ": outcome out of range");
    if (schema_.has_group() && !r.context.group) throw ValidationError(where + ": missing group attribute");
  }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  std::vector<Observation> rows;
  rows.reserve(indices.size());
  for (auto t : indices) rows.push_back(rows_.at(t));
  return Dataset(schema_, std::move(rows));
}

AugmentedDataset::AugmentedDataset(Dataset base, StakeholderSet actors, std::vector<std::vector<double>> rewards)
    : base_(std::move(base)), actors_(std::move(actors)), rewards_(std::move(rewards)) {
  if (rewards_.size() != base_.size()) {
    throw DimensionError("reward rows (" + std::to_string(rewards_.size()) + ") do not match dataset rows (" +
                         std::to_string(base_.size()) + ")");
  }
  for (std::size_t t = 0; t < rewards_.size(); ++t) {
    if (rewards_[t].size() != actors_.size()) {
      throw DimensionError("row " + std::to_string(t) + ": reward vector length differs from actor count");
    }
    for (std::size_t i = 0; i < rewards_[t].size(); ++i) {
      const double r = rewards_[t][i];
      if (!(r >= 0.0 && r <= 1.0)) {
        throw ValidationError("row " + std::to_string(t) + ": reward for actor '" + actors_.label(i) +
                              "' outside [0,1]");
      }
    }
  }
}

AugmentedDataset AugmentedDataset::subset(std::span<const std::size_t> indices) const {
  std::vector<std::vector<double>> rewards;
  rewards.reserve(indices.size());
  for (auto t : indices) rewards.push_back(rewards_.at(t));
  return AugmentedDataset(base_.subset(indices), actors_, std::move(rewards));
}

RewardTensor::RewardTensor(std::size_t contexts, std::size_t actors, std::size_t actions, double fill)
    : contexts_(contexts), actors_(actors), actions_(actions), values_(contexts * actors * actions, fill) {}

RewardTensor RewardTensor::from_matrices(std::span<const ExpectedRewardMatrix> matrices) {
  if (matrices.empty()) return {};
  const auto n = matrices.front().actors();
  const auto k = matrices.front().actions();
  RewardTensor out(matrices.size(), n, k);
  for (std::size_t x = 0; x < matrices.size(); ++x) {
    if (matrices[x].actors() != n || matrices[x].actions() != k) {
      throw DimensionError("context " + std::to_string(x) + " has a differently shaped reward matrix");
    }
    std::copy(matrices[x].values.data().begin(), matrices[x].values.data().end(),
              out.values_.begin() + static_cast<std::ptrdiff_t>(x * n * k));
  }
  return out;
}

ExpectedRewardMatrix RewardTensor::matrix(std::size_t x) const {
  const auto begin = values_.begin() + static_cast<std::ptrdiff_t>(x * actors_ * actions_);
  return {Matrix(actors_, actions_, std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(actors_ * actions_)))};
}

void validate_distribution(std::span<double> row, std::string_view what) {
  double sum = 0.0;
  for (double p : row) {
    if (!std::isfinite(p) || p < 0.0) throw ValidationError(std::string(what) + ": negative or non-finite probability");
    sum += p;
  }
  const double dev = std::abs(sum - 1.0);
  if (dev <= kStochasticTolerance) return;
  if (dev > kRenormalizeTolerance) {
    throw ValidationError(std::string(what) + ": probabilities sum to " + std::to_string(sum) + ", not 1");
  }
  for (double& p : row) p /= sum;
}

ExpectedRewardMatrix build_expected_reward_matrix(const Matrix& outcome_distribution,
                                                  std::span<const PredictedRewardMatrix> reward_matrices) {
  const std::size_t k = outcome_distribution.rows();
  const std::size_t m = outcome_distribution.cols();
  if (k == 0 || m == 0) throw DimensionError("outcome distribution must be non-empty");
  if (reward_matrices.empty()) throw DimensionError("at least one actor reward matrix is required");

  Matrix f = outcome_distribution;
  for (std::size_t a = 0; a < k; ++a) validate_distribution(f.row(a), "outcome distribution row " + std::to_string(a));

  Matrix e(reward_matrices.size(), k);
  for (std::size_t i = 0; i < reward_matrices.size(); ++i) {
    const Matrix& q = reward_matrices[i].values;
    if (q.rows() != k || q.cols() != m) {
      throw DimensionError("reward matrix for actor '" + reward_matrices[i].actor + "' is " + std::to_string(q.rows()) +
                           "x" + std::to_string(q.cols()) + ", expected " + std::to_string(k) + "x" +
                           std::to_string(m));
    }
    for (std::size_t a = 0; a < k; ++a) {
      double acc = 0.0;
      for (std::size_t o = 0; o < m; ++o) {
        const double r = q(a, o);
        if (!(r >= 0.0 && r <= 1.0)) {
          throw ValidationError("reward matrix for actor '" + reward_matrices[i].actor + "' has entry outside [0,1]");
        }
        acc += r * f(a, o);
      }
      e(i, a) = std::clamp(acc, 0.0, 1.0);
    }
  }
  return {std::move(e)};
}

RewardTensor clip_to_tube(const RewardTensor& tensor, double mu) {
  if (!(mu > 0.0 && mu < 0.5)) throw ParameterError("tube margin mu must lie in (0, 0.5)");
  RewardTensor out = tensor;
  for (double& e : out.values()) e = std::min(std::max(e, mu), 1.0 - mu);
  return out;
}

}  // namespace concord
