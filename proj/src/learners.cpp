#include "concord/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "concord/error.hpp"
#include "concord/rng.hpp"

namespace concord {

const char* to_string(LearnerKind kind) noexcept {
  switch (kind) {
    case LearnerKind::knn: return "knn";
    case LearnerKind::forest: return "forest";
    case LearnerKind::table: return "table";
  }
  return "unknown";
}

const char* to_string(Task task) noexcept { return task == Task::classification ? "classification" : "regression"; }

LearnerConfig LearnerConfig::knn(int k) {
  LearnerConfig c;
  c.kind = LearnerKind::knn;
  c.k = k;
  return c;
}

LearnerConfig LearnerConfig::forest(int trees, int max_depth, std::uint64_t seed) {
  LearnerConfig c;
  c.kind = LearnerKind::forest;
  c.trees = trees;
  c.max_depth = max_depth;
  c.seed = seed;
  return c;
}

LearnerConfig LearnerConfig::table(std::vector<std::string> keys) {
  LearnerConfig c;
  c.kind = LearnerKind::table;
  c.table_keys = std::move(keys);
  return c;
}

std::string LearnerConfig::label() const {
  switch (kind) {
    case LearnerKind::knn: return "knn(k=" + std::to_string(k) + ")";
    case LearnerKind::forest:
      return "forest(trees=" + std::to_string(trees) +
             ",depth=" + (max_depth < 0 ? std::string("inf") : std::to_string(max_depth)) + ")";
    case LearnerKind::table: {
      std::string s = "table(";
      for (std::size_t i = 0; i < table_keys.size(); ++i) s += (i ? "," : "") + table_keys[i];
      return s + ")";
    }
  }
  return "unknown";
}

json to_json(const LearnerConfig& c) {
  json j{{"kind", to_string(c.kind)}};
  switch (c.kind) {
    case LearnerKind::knn: j["k"] = c.k; break;
    case LearnerKind::forest:
      j["trees"] = c.trees;
      j["max_depth"] = c.max_depth;
      j["min_leaf"] = c.min_leaf;
      j["feature_fraction"] = c.feature_fraction;
      j["bootstrap"] = c.bootstrap;
      j["seed"] = c.seed;
      break;
    case LearnerKind::table: j["keys"] = c.table_keys; break;
  }
  return j;
}

LearnerConfig learner_config_from_json(const JsonCursor& cur) {
  LearnerConfig c;
  const auto kind = cur.at("kind").as_string();
  if (kind == "knn") {
    c.kind = LearnerKind::knn;
    c.k = static_cast<int>(cur.get_int("k", 5));
    if (c.k < 1) cur.at("k").fail("k must be >= 1");
  } else if (kind == "forest") {
    c.kind = LearnerKind::forest;
    c.trees = static_cast<int>(cur.get_int("trees", 25));
    c.max_depth = static_cast<int>(cur.get_int("max_depth", -1));
    c.min_leaf = static_cast<int>(cur.get_int("min_leaf", 1));
    c.feature_fraction = cur.get_double("feature_fraction", 0.0);
    c.bootstrap = cur.get_bool("bootstrap", true);
    c.seed = static_cast<std::uint64_t>(cur.get_int("seed", 0));
    if (c.trees < 1) cur.at("trees").fail("trees must be >= 1");
    if (c.min_leaf < 1) cur.at("min_leaf").fail("min_leaf must be >= 1");
  } else if (kind == "table") {
    c.kind = LearnerKind::table;
    c.table_keys = cur.at("keys").as_strings();
  } else {
    cur.at("kind").fail("unknown learner kind '" + kind + "'");
  }
  return c;
}

std::vector<LearnerConfig> default_knn_grid() {
  return {LearnerConfig::knn(1), LearnerConfig::knn(3), LearnerConfig::knn(5), LearnerConfig::knn(7)};
}

std::vector<LearnerConfig> default_forest_grid(std::uint64_t seed) {
  std::vector<LearnerConfig> grid;
  for (int trees : {25, 100}) {
    for (int depth : {4, 8, -1}) grid.push_back(LearnerConfig::forest(trees, depth, seed));
  }
  return grid;
}

// ---------------------------------------------------------------------------------------
// Input layout

std::size_t InputLayout::width() const noexcept {
  std::size_t w = feature_names.size() + (has_group ? 1 : 0) + n_actions;
  if (outcome == OutcomeInput::one_hot) w += n_outcomes;
  if (outcome == OutcomeInput::scalar) w += 1;
  return w;
}

std::vector<double> InputLayout::encode(const Context& context, std::optional<std::size_t> action,
                                        std::optional<double> outcome) const {
  std::vector<double> row(width());
  encode_into(row, context, action, outcome);
  return row;
}

void InputLayout::encode_into(std::span<double> out, const Context& context, std::optional<std::size_t> action,
                              std::optional<double> outcome_value) const {
  if (context.features.size() != feature_names.size()) {
    throw DimensionError("context has " + std::to_string(context.features.size()) + " features, model expects " +
                         std::to_string(feature_names.size()));
  }
  std::size_t c = 0;
  for (double v : context.features) out[c++] = v;
  if (has_group) {
    if (!context.group) throw ValidationError("context is missing the group attribute required by the model");
    out[c++] = static_cast<double>(*context.group);
  }
  if (n_actions > 0) {
    if (!action || *action >= n_actions) throw ValidationError("model input requires an action index in range");
    for (std::size_t a = 0; a < n_actions; ++a) out[c++] = a == *action ? 1.0 : 0.0;
  }
  if (outcome == OutcomeInput::one_hot) {
    if (!outcome_value) throw ValidationError("model input requires an outcome");
    const auto k = static_cast<std::size_t>(std::llround(*outcome_value));
    if (k >= n_outcomes) throw ValidationError("outcome index out of range for model input");
    for (std::size_t o = 0; o < n_outcomes; ++o) out[c++] = o == k ? 1.0 : 0.0;
  } else if (outcome == OutcomeInput::scalar) {
    if (!outcome_value) throw ValidationError("model input requires an outcome");
    out[c++] = *outcome_value;
  }
}

bool InputLayout::has_field(const std::string& field) const {
  if (field == "group") return has_group;
  if (field == "action") return n_actions > 0;
  if (field == "outcome") return outcome != OutcomeInput::none;
  return std::find(feature_names.begin(), feature_names.end(), field) != feature_names.end();
}

double InputLayout::field_value(std::span<const double> row, const std::string& field) const {
  const std::size_t nf = feature_names.size();
  const std::size_t group_col = nf;
  const std::size_t action_col = nf + (has_group ? 1 : 0);
  const std::size_t outcome_col = action_col + n_actions;
  auto hot_index = [&](std::size_t begin, std::size_t count) {
    for (std::size_t j = 0; j < count; ++j) {
      if (row[begin + j] > 0.5) return static_cast<double>(j);
    }
    return -1.0;
  };
  if (field == "group" && has_group) return row[group_col];
  if (field == "action" && n_actions > 0) return hot_index(action_col, n_actions);
  if (field == "outcome" && outcome == OutcomeInput::one_hot) return hot_index(outcome_col, n_outcomes);
  if (field == "outcome" && outcome == OutcomeInput::scalar) return row[outcome_col];
  for (std::size_t j = 0; j < nf; ++j) {
    if (feature_names[j] == field) return row[j];
  }
  throw ConfigurationError("model input has no field '" + field + "'");
}

json to_json(const InputLayout& l) {
  const char* mode = l.outcome == OutcomeInput::none ? "none" : l.outcome == OutcomeInput::one_hot ? "one_hot" : "scalar";
  return {{"features", l.feature_names},
          {"group", l.has_group},
          {"actions", l.n_actions},
          {"outcome", mode},
          {"outcomes", l.n_outcomes}};
}

InputLayout input_layout_from_json(const JsonCursor& cur) {
  InputLayout l;
  l.feature_names = cur.at("features").as_strings();
  l.has_group = cur.get_bool("group", false);
  l.n_actions = static_cast<std::size_t>(cur.get_int("actions", 0));
  const auto mode = cur.get_string("outcome", "none");
  if (mode == "none") l.outcome = OutcomeInput::none;
  else if (mode == "one_hot") l.outcome = OutcomeInput::one_hot;
  else if (mode == "scalar") l.outcome = OutcomeInput::scalar;
  else cur.at("outcome").fail("unknown outcome encoding '" + mode + "'");
  l.n_outcomes = static_cast<std::size_t>(cur.get_int("outcomes", 0));
  return l;
}

// ---------------------------------------------------------------------------------------
// Fitting

namespace {

using detail::ForestState;
using detail::KnnState;
using detail::TableState;
using detail::Tree;
using detail::TreeNode;

KnnState fit_knn(const Matrix& x, std::span<const double> y) {
  KnnState s;
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  s.mean.assign(p, 0.0);
  s.scale.assign(p, 1.0);
  for (std::size_t j = 0; j < p; ++j) {
    double mean = 0.0;
    for (std::size_t t = 0; t < n; ++t) mean += x(t, j);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t t = 0; t < n; ++t) var += (x(t, j) - mean) * (x(t, j) - mean);
    var /= static_cast<double>(n);
    s.mean[j] = mean;
    s.scale[j] = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
  s.inputs = Matrix(n, p);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t j = 0; j < p; ++j) s.inputs(t, j) = (x(t, j) - s.mean[j]) / s.scale[j];
  }
  s.targets.assign(y.begin(), y.end());
  return s;
}

// Indices of the k nearest training rows; ties in distance go to the lower row index.
std::vector<std::size_t> nearest(const KnnState& s, std::span<const double> row, int k) {
  const std::size_t n = s.inputs.rows();
  const std::size_t p = s.inputs.cols();
  std::vector<double> z(p);
  for (std::size_t j = 0; j < p; ++j) z[j] = (row[j] - s.mean[j]) / s.scale[j];
  std::vector<std::pair<double, std::size_t>> d(n);
  for (std::size_t t = 0; t < n; ++t) {
    const auto r = s.inputs.row(t);
    double acc = 0.0;
    for (std::size_t j = 0; j < p; ++j) acc += (r[j] - z[j]) * (r[j] - z[j]);
    d[t] = {acc, t};
  }
  const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(std::max(k, 1)), n);
  std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(kk), d.end());
  std::vector<std::size_t> out(kk);
  for (std::size_t i = 0; i < kk; ++i) out[i] = d[i].second;
  return out;
}

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const double> y, Task task, std::size_t n_classes, const LearnerConfig& cfg,
              Rng& rng, Tree& tree)
      : x_(x), y_(y), task_(task), n_classes_(n_classes), cfg_(cfg), rng_(rng), tree_(tree) {
    const std::size_t p = x.cols();
    if (cfg.feature_fraction > 0.0) {
      n_candidates_ = static_cast<std::size_t>(std::llround(cfg.feature_fraction * static_cast<double>(p)));
    } else {
      n_candidates_ = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(p))));
    }
    n_candidates_ = std::clamp<std::size_t>(n_candidates_, 1, std::max<std::size_t>(p, 1));
  }

  int build(std::vector<std::size_t>& idx, std::size_t begin, std::size_t end, int depth) {
    const std::size_t n = end - begin;
    const int node_id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();

    const bool depth_exhausted = cfg_.max_depth >= 0 && depth >= cfg_.max_depth;
    const bool too_small = n < 2 * static_cast<std::size_t>(cfg_.min_leaf);
    Split best;
    if (!depth_exhausted && !too_small && !pure(idx, begin, end)) best = find_split(idx, begin, end);
    if (best.feature < 0) {
      make_leaf(node_id, idx, begin, end);
      return node_id;
    }

    auto mid_it = std::stable_partition(idx.begin() + static_cast<std::ptrdiff_t>(begin),
                                        idx.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t t) {
                                          return x_(t, static_cast<std::size_t>(best.feature)) <= best.threshold;
                                        });
    const auto mid = static_cast<std::size_t>(mid_it - idx.begin());
    tree_.nodes[node_id].feature = best.feature;
    tree_.nodes[node_id].threshold = best.threshold;
    const int left = build(idx, begin, mid, depth + 1);
    const int right = build(idx, mid, end, depth + 1);
    tree_.nodes[node_id].left = left;
    tree_.nodes[node_id].right = right;
    return node_id;
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double impurity = 0.0;
  };

  bool pure(const std::vector<std::size_t>& idx, std::size_t begin, std::size_t end) const {
    for (std::size_t i = begin + 1; i < end; ++i) {
      if (y_[idx[i]] != y_[idx[begin]]) return false;
    }
    return true;
  }

  void make_leaf(int node_id, const std::vector<std::size_t>& idx, std::size_t begin, std::size_t end) {
    std::vector<double> value;
    const double n = static_cast<double>(end - begin);
    if (task_ == Task::classification) {
      value.assign(n_classes_, 0.0);
      for (std::size_t i = begin; i < end; ++i) value[static_cast<std::size_t>(y_[idx[i]])] += 1.0;
      for (double& v : value) v /= n;
    } else {
      double sum = 0.0;
      for (std::size_t i = begin; i < end; ++i) sum += y_[idx[i]];
      value.push_back(sum / n);
    }
    tree_.nodes[node_id].value = static_cast<int>(tree_.values.size());
    tree_.values.push_back(std::move(value));
  }

  // Gini (weighted by count) or sum of squared errors.
  double impurity(const std::vector<double>& counts, double n, double sum, double sum_sq) const {
    if (n <= 0) return 0.0;
    if (task_ == Task::classification) {
      double s = 0.0;
      for (double c : counts) s += c * c;
      return n - s / n;
    }
    return std::max(0.0, sum_sq - sum * sum / n);
  }

  Split find_split(const std::vector<std::size_t>& idx, std::size_t begin, std::size_t end) {
    const std::size_t p = x_.cols();
    std::vector<std::size_t> features(p);
    std::iota(features.begin(), features.end(), 0);
    for (std::size_t i = 0; i < n_candidates_; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, p - 1);
      std::swap(features[i], features[pick(rng_)]);
    }
    features.resize(n_candidates_);
    std::sort(features.begin(), features.end());

    const std::size_t n = end - begin;
    const auto min_leaf = static_cast<std::size_t>(cfg_.min_leaf);
    std::vector<double> total_counts(task_ == Task::classification ? n_classes_ : 0, 0.0);
    double total_sum = 0.0, total_sq = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      const double y = y_[idx[i]];
      if (task_ == Task::classification) total_counts[static_cast<std::size_t>(y)] += 1.0;
      total_sum += y;
      total_sq += y * y;
    }
    const double parent = impurity(total_counts, static_cast<double>(n), total_sum, total_sq);

    Split best;
    best.impurity = parent - 1e-12 * std::max(1.0, parent);
    std::vector<std::size_t> order(n);
    std::vector<double> left_counts(total_counts.size());
    for (std::size_t f : features) {
      std::copy(idx.begin() + static_cast<std::ptrdiff_t>(begin), idx.begin() + static_cast<std::ptrdiff_t>(end),
                order.begin());
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double va = x_(a, f), vb = x_(b, f);
        return va < vb || (va == vb && a < b);
      });
      std::fill(left_counts.begin(), left_counts.end(), 0.0);
      double ls = 0.0, lsq = 0.0;
      for (std::size_t j = 0; j + 1 < n; ++j) {
        const double y = y_[order[j]];
        if (task_ == Task::classification) left_counts[static_cast<std::size_t>(y)] += 1.0;
        ls += y;
        lsq += y * y;
        const std::size_t nl = j + 1, nr = n - nl;
        const double v = x_(order[j], f), v_next = x_(order[j + 1], f);
        if (!(v < v_next) || nl < min_leaf || nr < min_leaf) continue;
        double imp;
        if (task_ == Task::classification) {
          std::vector<double> right(total_counts.size());
          for (std::size_t c = 0; c < right.size(); ++c) right[c] = total_counts[c] - left_counts[c];
          imp = impurity(left_counts, static_cast<double>(nl), 0, 0) + impurity(right, static_cast<double>(nr), 0, 0);
        } else {
          imp = impurity({}, static_cast<double>(nl), ls, lsq) +
                impurity({}, static_cast<double>(nr), total_sum - ls, total_sq - lsq);
        }
        if (imp < best.impurity) {
          double thr = 0.5 * (v + v_next);
          if (!(thr < v_next)) thr = v;
          best = {static_cast<int>(f), thr, imp};
        }
      }
    }
    return best;
  }

  const Matrix& x_;
  std::span<const double> y_;
  Task task_;
  std::size_t n_classes_;
  const LearnerConfig& cfg_;
  Rng& rng_;
  Tree& tree_;
  std::size_t n_candidates_ = 1;
};

ForestState fit_forest(const LearnerConfig& cfg, Task task, std::size_t n_classes, const Matrix& x,
                       std::span<const double> y) {
  ForestState s;
  const std::size_t n = x.rows();
  for (int b = 0; b < cfg.trees; ++b) {
    Rng rng(derive_seed(cfg.seed, "tree/" + std::to_string(b)));
    std::vector<std::size_t> idx(n);
    if (cfg.bootstrap) {
      std::uniform_int_distribution<std::size_t> draw(0, n - 1);
      for (auto& t : idx) t = draw(rng);
      std::sort(idx.begin(), idx.end());
    } else {
      std::iota(idx.begin(), idx.end(), 0);
    }
    Tree tree;
    TreeBuilder builder(x, y, task, n_classes, cfg, rng, tree);
    builder.build(idx, 0, n, 0);
    s.trees.push_back(std::move(tree));
  }
  return s;
}

const std::vector<double>& tree_leaf(const Tree& tree, std::span<const double> row) {
  int node = 0;
  while (tree.nodes[static_cast<std::size_t>(node)].feature >= 0) {
    const auto& nd = tree.nodes[static_cast<std::size_t>(node)];
    node = row[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right;
  }
  return tree.values[static_cast<std::size_t>(tree.nodes[static_cast<std::size_t>(node)].value)];
}

std::string join_key(const std::vector<double>& values) {
  std::string key;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) key += ',';
    key += format_double(values[i]);
  }
  return key;
}

}  // namespace

Learner Learner::fit(const LearnerConfig& config, Task task, const InputLayout& layout, std::size_t n_classes,
                     const Matrix& inputs, std::span<const double> targets) {
  if (inputs.rows() == 0) throw FitError("cannot fit a model on zero rows");
  if (inputs.rows() != targets.size()) throw DimensionError("inputs and targets differ in length");
  if (inputs.cols() != layout.width()) throw DimensionError("input width does not match the model layout");
  if (task == Task::classification) {
    if (n_classes == 0) throw ParameterError("classification needs at least one class");
    for (double y : targets) {
      if (!(y >= 0 && y < static_cast<double>(n_classes)) || std::floor(y) != y) {
        throw ValidationError("classification target out of range");
      }
    }
  }
  Learner l;
  l.config_ = config;
  l.task_ = task;
  l.layout_ = layout;
  l.n_classes_ = task == Task::classification ? n_classes : 0;
  switch (config.kind) {
    case LearnerKind::knn:
      if (config.k < 1) throw ParameterError("k must be >= 1");
      l.state_ = fit_knn(inputs, targets);
      break;
    case LearnerKind::forest:
      if (config.trees < 1 || config.min_leaf < 1) throw ParameterError("forest needs trees >= 1 and min_leaf >= 1");
      l.state_ = fit_forest(config, task, l.n_classes_, inputs, targets);
      break;
    case LearnerKind::table: {
      if (config.table_keys.empty()) throw ParameterError("table learner needs at least one key field");
      for (const auto& f : config.table_keys) {
        if (!layout.has_field(f)) throw ConfigurationError("table key '" + f + "' is not a model input field");
      }
      std::map<std::string, std::pair<std::vector<double>, double>> acc;
      for (std::size_t t = 0; t < inputs.rows(); ++t) {
        auto& [sum, count] = acc[l.table_key(inputs.row(t))];
        if (task == Task::classification) {
          sum.resize(n_classes, 0.0);
          sum[static_cast<std::size_t>(targets[t])] += 1.0;
        } else {
          sum.resize(1, 0.0);
          sum[0] += targets[t];
        }
        count += 1.0;
      }
      TableState s;
      for (auto& [key, entry] : acc) {
        for (double& v : entry.first) v /= entry.second;
        s.entries.emplace(key, std::move(entry.first));
      }
      l.state_ = std::move(s);
      break;
    }
  }
  return l;
}

void Learner::require_fitted() const {
  if (!fitted()) throw StateError("model has not been fitted");
}

std::string Learner::table_key(std::span<const double> row) const {
  std::vector<double> values;
  values.reserve(config_.table_keys.size());
  for (const auto& f : config_.table_keys) values.push_back(layout_.field_value(row, f));
  return join_key(values);
}

std::vector<double> Learner::predict_distribution(std::span<const double> row) const {
  require_fitted();
  if (task_ != Task::classification) throw StateError("predict_distribution called on a regression model");
  if (row.size() != layout_.width()) throw DimensionError("query width does not match the model layout");
  std::vector<double> dist(n_classes_, 0.0);
  if (const auto* s = std::get_if<KnnState>(&state_)) {
    const auto nn = nearest(*s, row, config_.k);
    for (auto t : nn) dist[static_cast<std::size_t>(s->targets[t])] += 1.0;
    for (double& p : dist) p /= static_cast<double>(nn.size());
  } else if (const auto* s = std::get_if<ForestState>(&state_)) {
    for (const auto& tree : s->trees) {
      const auto& leaf = tree_leaf(tree, row);
      for (std::size_t c = 0; c < n_classes_; ++c) dist[c] += leaf[c];
    }
    for (double& p : dist) p /= static_cast<double>(s->trees.size());
  } else if (const auto* s = std::get_if<TableState>(&state_)) {
    const auto key = table_key(row);
    auto it = s->entries.find(key);
    if (it == s->entries.end()) throw LookupError("no table entry for key (" + key + ")");
    dist = it->second;
  }
  return dist;
}

std::vector<double> Learner::predict_members(std::span<const double> row) const {
  require_fitted();
  if (task_ != Task::regression) throw StateError("predict_members called on a classification model");
  if (row.size() != layout_.width()) throw DimensionError("query width does not match the model layout");
  std::vector<double> members;
  if (const auto* s = std::get_if<KnnState>(&state_)) {
    for (auto t : nearest(*s, row, config_.k)) members.push_back(s->targets[t]);
  } else if (const auto* s = std::get_if<ForestState>(&state_)) {
    for (const auto& tree : s->trees) members.push_back(tree_leaf(tree, row)[0]);
  } else if (const auto* s = std::get_if<TableState>(&state_)) {
    const auto key = table_key(row);
    auto it = s->entries.find(key);
    if (it == s->entries.end()) throw LookupError("no table entry for key (" + key + ")");
    members.push_back(it->second.at(0));
  }
  return members;
}

double Learner::predict_value(std::span<const double> row) const {
  const auto members = predict_members(row);
  double sum = 0.0;
  for (double v : members) sum += v;
  return sum / static_cast<double>(members.size());
}

// ---------------------------------------------------------------------------------------
// Serialization

json Learner::to_json() const {
  require_fitted();
  json j{{"config", concord::to_json(config_)},
         {"task", concord::to_string(task_)},
         {"layout", concord::to_json(layout_)},
         {"classes", n_classes_}};
  if (const auto* s = std::get_if<KnnState>(&state_)) {
    j["mean"] = s->mean;
    j["scale"] = s->scale;
    j["inputs"] = s->inputs.to_rows();
    j["targets"] = s->targets;
  } else if (const auto* s = std::get_if<ForestState>(&state_)) {
    json trees = json::array();
    for (const auto& tree : s->trees) {
      json nodes = json::array();
      for (const auto& n : tree.nodes) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
      trees.push_back({{"nodes", nodes}, {"values", tree.values}});
    }
    j["trees"] = std::move(trees);
  } else if (const auto* s = std::get_if<TableState>(&state_)) {
    json entries = json::array();
    for (const auto& [key, value] : s->entries) {
      std::vector<double> parts;
      std::size_t start = 0;
      while (start <= key.size()) {
        const auto comma = key.find(',', start);
        const auto piece = key.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        parts.push_back(*parse_double(piece));
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
      entries.push_back({{"key", parts}, {"value", value}});
    }
    j["entries"] = std::move(entries);
  }
  return j;
}

Learner Learner::from_json(const JsonCursor& cur) {
  Learner l;
  l.config_ = learner_config_from_json(cur.at("config"));
  const auto task = cur.at("task").as_string();
  if (task == "classification") l.task_ = Task::classification;
  else if (task == "regression") l.task_ = Task::regression;
  else cur.at("task").fail("unknown task '" + task + "'");
  l.layout_ = input_layout_from_json(cur.at("layout"));
  l.n_classes_ = static_cast<std::size_t>(cur.get_int("classes", 0));
  const std::size_t width = l.layout_.width();

  switch (l.config_.kind) {
    case LearnerKind::knn: {
      KnnState s;
      s.mean = cur.at("mean").as_doubles();
      s.scale = cur.at("scale").as_doubles();
      std::vector<std::vector<double>> rows;
      for (const auto& r : cur.at("inputs").items()) rows.push_back(r.as_doubles());
      s.inputs = Matrix::from_rows(rows);
      s.targets = cur.at("targets").as_doubles();
      if (s.mean.size() != width || s.scale.size() != width || s.inputs.cols() != width ||
          s.inputs.rows() != s.targets.size() || s.targets.empty()) {
        cur.fail("inconsistent k-NN state");
      }
      l.state_ = std::move(s);
      break;
    }
    case LearnerKind::forest: {
      ForestState s;
      for (const auto& t : cur.at("trees").items()) {
        Tree tree;
        for (const auto& n : t.at("nodes").items()) {
          const auto parts = n.items();
          if (parts.size() != 5) n.fail("tree node must have 5 entries");
          TreeNode node;
          node.feature = static_cast<int>(parts[0].as_int());
          node.threshold = parts[1].as_double();
          node.left = static_cast<int>(parts[2].as_int());
          node.right = static_cast<int>(parts[3].as_int());
          node.value = static_cast<int>(parts[4].as_int());
          tree.nodes.push_back(node);
        }
        for (const auto& v : t.at("values").items()) tree.values.push_back(v.as_doubles());
        const auto n_nodes = static_cast<int>(tree.nodes.size());
        for (const auto& node : tree.nodes) {
          const bool leaf_ok = node.feature < 0 && node.value >= 0 && node.value < static_cast<int>(tree.values.size());
          const bool split_ok = node.feature >= 0 && node.feature < static_cast<int>(width) && node.left > 0 &&
                                node.left < n_nodes && node.right > 0 && node.right < n_nodes;
          if (!leaf_ok && !split_ok) t.fail("malformed tree node");
        }
        if (tree.nodes.empty()) t.fail("empty tree");
        s.trees.push_back(std::move(tree));
      }
      if (s.trees.empty()) cur.fail("forest has no trees");
      l.state_ = std::move(s);
      break;
    }
    case LearnerKind::table: {
      TableState s;
      for (const auto& e : cur.at("entries").items()) {
        const auto key = e.at("key").as_doubles();
        if (key.size() != l.config_.table_keys.size()) e.fail("table key arity differs from the key fields");
        std::vector<double> value;
        if (e.at("value").node().is_array()) value = e.at("value").as_doubles();
        else value.push_back(e.at("value").as_double());
        s.entries[join_key(key)] = std::move(value);
      }
      l.state_ = std::move(s);
      break;
    }
  }
  return l;
}

}  // namespace concord
