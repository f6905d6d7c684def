#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "concord/error.hpp"
#include "concord/learners.hpp"
#include "concord/rng.hpp"

namespace concord {

json to_json(const ModelReport& r) {
  json j{{"heldout_error", r.heldout_error},
         {"heldout_rows", r.heldout_rows},
         {"heldout_skipped", r.heldout_skipped},
         {"chosen", to_json(r.chosen)},
         {"grid_size", r.grid_size},
         {"grid_errors", r.grid_errors},
         {"degenerate", r.degenerate}};
  if (!r.warning.empty()) j["warning"] = r.warning;
  return j;
}

InputLayout outcome_input_layout(const Schema& schema) {
  InputLayout l;
  l.feature_names = schema.feature_names;
  l.has_group = schema.has_group();
  l.n_actions = schema.actions.size();
  l.outcome = OutcomeInput::none;
  return l;
}

InputLayout reward_input_layout(const Schema& schema) {
  InputLayout l = outcome_input_layout(schema);
  l.n_outcomes = schema.outcomes.size();
  l.outcome = schema.outcomes.is_discrete() ? OutcomeInput::one_hot : OutcomeInput::scalar;
  return l;
}

// ---------------------------------------------------------------------------------------

OutcomePredictor::OutcomePredictor(Learner learner, OutcomeSpace outcomes, std::size_t n_actions)
    : learner_(std::move(learner)), outcomes_(std::move(outcomes)), n_actions_(n_actions) {
  if (!learner_.fitted()) throw StateError("outcome predictor needs a fitted learner");
  const bool want_cls = outcomes_->is_discrete();
  if (want_cls != (learner_.task() == Task::classification)) {
    throw ConfigurationError("outcome learner task does not match the outcome space");
  }
  if (want_cls && learner_.n_classes() != outcomes_->size()) {
    throw DimensionError("outcome learner class count differs from the outcome space");
  }
}

std::vector<double> OutcomePredictor::distribution(const Context& context, std::size_t action) const {
  if (!fitted()) throw StateError("outcome predictor has not been fitted");
  if (action >= n_actions_) throw ValidationError("action index out of range");
  const auto row = learner_.layout().encode(context, action);
  if (outcomes_->is_discrete()) {
    auto p = learner_.predict_distribution(row);
    validate_distribution(p, "outcome distribution");
    return p;
  }
  const auto members = learner_.predict_members(row);
  std::vector<double> p(outcomes_->size(), 0.0);
  for (double v : members) p[outcomes_->bin_of(v)] += 1.0;
  for (double& v : p) v /= static_cast<double>(members.size());
  return p;
}

Matrix OutcomePredictor::distribution_matrix(const Context& context) const {
  Matrix m(n_actions_, outcomes_ ? outcomes_->size() : 0);
  for (std::size_t a = 0; a < n_actions_; ++a) {
    const auto p = distribution(context, a);
    std::copy(p.begin(), p.end(), m.row(a).begin());
  }
  return m;
}

double OutcomePredictor::expected_outcome(const Context& context, std::size_t action) const {
  if (!fitted()) throw StateError("outcome predictor has not been fitted");
  if (!outcomes_->is_discrete()) {
    if (action >= n_actions_) throw ValidationError("action index out of range");
    return learner_.predict_value(learner_.layout().encode(context, action));
  }
  const auto p = distribution(context, action);
  double acc = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) acc += p[k] * static_cast<double>(k);
  return acc;
}

namespace {

json outcome_space_json(const OutcomeSpace& s) {
  if (s.is_discrete()) return {{"type", "discrete"}, {"labels", s.labels()}};
  return {{"type", "continuous"}, {"bin_edges", s.bin_edges()}};
}

OutcomeSpace outcome_space_from(const JsonCursor& cur) {
  const auto type = cur.at("type").as_string();
  if (type == "discrete") return OutcomeSpace::discrete(cur.at("labels").as_strings());
  if (type == "continuous") return OutcomeSpace::continuous(cur.at("bin_edges").as_doubles());
  cur.at("type").fail("unknown outcome type '" + type + "'");
}

}  // namespace

json to_json(const OutcomePredictor& p) {
  if (!p.fitted()) throw StateError("outcome predictor has not been fitted");
  return {{"kind", "outcome_predictor"},
          {"outcomes", outcome_space_json(*p.outcomes())},
          {"actions", p.n_actions()},
          {"learner", p.learner().to_json()}};
}

OutcomePredictor outcome_predictor_from_json(const json& doc) {
  JsonCursor cur(doc);
  if (cur.get_string("kind", "") != "outcome_predictor") cur.fail("not an outcome predictor document");
  return OutcomePredictor(Learner::from_json(cur.at("learner")), outcome_space_from(cur.at("outcomes")),
                          cur.at("actions").as_size());
}

RewardModel::RewardModel(std::string actor, Learner learner, OutcomeSpace outcomes)
    : actor_(std::move(actor)), learner_(std::move(learner)), outcomes_(std::move(outcomes)) {
  if (!learner_.fitted()) throw StateError("reward model needs a fitted learner");
  if (learner_.task() != Task::regression) throw ConfigurationError("reward model must be a regression learner");
}

double RewardModel::predict(const Context& context, std::size_t action, double outcome) const {
  if (!fitted()) throw StateError("reward model has not been fitted");
  const auto row = learner_.layout().encode(context, action, outcome);
  return std::clamp(learner_.predict_value(row), 0.0, 1.0);
}

json to_json(const RewardModel& m) {
  if (!m.fitted()) throw StateError("reward model has not been fitted");
  return {{"kind", "reward_model"},
          {"actor", m.actor()},
          {"outcomes", outcome_space_json(*m.outcomes())},
          {"learner", m.learner().to_json()}};
}

RewardModel reward_model_from_json(const json& doc) {
  JsonCursor cur(doc);
  if (cur.get_string("kind", "") != "reward_model") cur.fail("not a reward model document");
  return RewardModel(cur.at("actor").as_string(), Learner::from_json(cur.at("learner")),
                     outcome_space_from(cur.at("outcomes")));
}

PredictedRewardMatrix predict_reward_matrix(const RewardModel& model, const Context& context, std::size_t n_actions) {
  const auto& outcomes = *model.outcomes();
  Matrix q(n_actions, outcomes.size());
  for (std::size_t a = 0; a < n_actions; ++a) {
    for (std::size_t o = 0; o < outcomes.size(); ++o) q(a, o) = model.predict(context, a, outcomes.value_of(o));
  }
  return {model.actor(), std::move(q)};
}

// ---------------------------------------------------------------------------------------
// Grid search

namespace {

using Clock = std::chrono::steady_clock;

struct Design {
  InputLayout layout;
  Task task;
  std::size_t n_classes;
  Matrix inputs;
  std::vector<double> targets;
};

Matrix take_rows(const Matrix& m, std::span<const std::size_t> idx) {
  Matrix out(idx.size(), m.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) std::copy(m.row(idx[r]).begin(), m.row(idx[r]).end(), out.row(r).begin());
  return out;
}

std::vector<double> take(std::span<const double> v, std::span<const std::size_t> idx) {
  std::vector<double> out;
  out.reserve(idx.size());
  for (auto t : idx) out.push_back(v[t]);
  return out;
}

struct Evaluation {
  double error = 0.0;
  std::size_t rows = 0;
  std::size_t skipped = 0;
};

Evaluation evaluate(const Learner& l, const Matrix& x, std::span<const double> y) {
  Evaluation ev;
  double acc = 0.0;
  for (std::size_t t = 0; t < x.rows(); ++t) {
    try {
      if (l.task() == Task::classification) {
        const auto p = l.predict_distribution(x.row(t));
        acc += 1.0 - p[static_cast<std::size_t>(y[t])];
      } else {
        acc += std::abs(l.predict_value(x.row(t)) - y[t]);
      }
      ++ev.rows;
    } catch (const LookupError&) {
      ++ev.skipped;
    }
  }
  ev.error = ev.rows ? acc / static_cast<double>(ev.rows) : std::numeric_limits<double>::infinity();
  return ev;
}

struct Searched {
  Learner learner;
  ModelReport report;
};

Searched grid_search(const Design& d, std::span<const LearnerConfig> grid, std::uint64_t seed, double holdout) {
  if (grid.empty()) throw ParameterError("hyperparameter grid must not be empty");
  if (!(holdout > 0.0 && holdout < 1.0)) throw ParameterError("holdout fraction must lie in (0,1)");
  const std::size_t n = d.inputs.rows();
  if (n == 0) throw FitError("cannot fit a model on zero rows");

  std::vector<std::size_t> train_idx, test_idx;
  if (n < 2) {
    train_idx = {0};
    test_idx = {0};
  } else {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng = make_rng(seed, "holdout");
    std::shuffle(perm.begin(), perm.end(), rng);
    auto n_test = static_cast<std::size_t>(std::llround(holdout * static_cast<double>(n)));
    n_test = std::clamp<std::size_t>(n_test, 1, n - 1);
    test_idx.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
    train_idx.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end());
    std::sort(test_idx.begin(), test_idx.end());
    std::sort(train_idx.begin(), train_idx.end());
  }
  const Matrix x_train = take_rows(d.inputs, train_idx);
  const Matrix x_test = take_rows(d.inputs, test_idx);
  const auto y_train = take(d.targets, train_idx);
  const auto y_test = take(d.targets, test_idx);

  ModelReport report;
  report.grid_size = grid.size();
  std::size_t best = 0;
  Evaluation best_ev{std::numeric_limits<double>::infinity(), 0, 0};
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const auto l = Learner::fit(grid[g], d.task, d.layout, d.n_classes, x_train, y_train);
    const auto ev = evaluate(l, x_test, y_test);
    report.grid_errors.push_back(ev.error);
    if (ev.error < best_ev.error) {
      best = g;
      best_ev = ev;
    }
  }
  if (!std::isfinite(best_ev.error)) {
    const auto ev = evaluate(Learner::fit(grid[0], d.task, d.layout, d.n_classes, x_train, y_train), x_test, y_test);
    best_ev = ev;
  }

  const auto t0 = Clock::now();
  Learner final_learner = Learner::fit(grid[best], d.task, d.layout, d.n_classes, d.inputs, d.targets);
  const auto t1 = Clock::now();
  evaluate(final_learner, x_test, y_test);
  const auto t2 = Clock::now();

  report.chosen = grid[best];
  report.heldout_error = best_ev.error;
  report.heldout_rows = best_ev.rows;
  report.heldout_skipped = best_ev.skipped;
  report.fit_seconds = std::chrono::duration<double>(t1 - t0).count();
  report.predict_seconds = std::chrono::duration<double>(t2 - t1).count();
  if (d.task == Task::classification) {
    const bool single = std::all_of(d.targets.begin(), d.targets.end(), [&](double y) { return y == d.targets[0]; });
    if (single) {
      report.degenerate = true;
      report.warning = "training data contains a single outcome class";
    }
  } else {
    const bool constant = std::all_of(d.targets.begin(), d.targets.end(), [&](double y) { return y == d.targets[0]; });
    if (constant) {
      report.degenerate = true;
      report.warning = "training targets are constant";
    }
  }
  return {std::move(final_learner), std::move(report)};
}

}  // namespace

FittedOutcomeModel fit_outcome_model(const Dataset& dataset, const OutcomeModelConfig& config) {
  if (dataset.empty()) throw FitError("cannot fit the outcome model on an empty dataset");
  const auto& schema = dataset.schema();
  Design d;
  d.layout = outcome_input_layout(schema);
  d.task = schema.outcomes.is_discrete() ? Task::classification : Task::regression;
  d.n_classes = schema.outcomes.is_discrete() ? schema.outcomes.size() : 0;
  d.inputs = Matrix(dataset.size(), d.layout.width());
  for (std::size_t t = 0; t < dataset.size(); ++t) {
    const auto& r = dataset.row(t);
    d.layout.encode_into(d.inputs.row(t), r.context, r.action, std::nullopt);
    d.targets.push_back(r.outcome);
  }
  auto s = grid_search(d, config.grid, derive_seed(config.seed, "outcome_model"), config.holdout_fraction);
  return {OutcomePredictor(std::move(s.learner), schema.outcomes, schema.actions.size()), std::move(s.report)};
}

FittedRewardModel fit_reward_model(const AugmentedDataset& augmented, const std::string& actor,
                                   std::span<const LearnerConfig> grid, std::uint64_t seed, double holdout_fraction) {
  const auto& base = augmented.base();
  if (base.empty()) throw FitError("cannot fit a reward model on an empty dataset");
  const std::size_t i = augmented.actors().index_of(actor);
  const auto& schema = base.schema();
  Design d;
  d.layout = reward_input_layout(schema);
  d.task = Task::regression;
  d.n_classes = 0;
  d.inputs = Matrix(base.size(), d.layout.width());
  for (std::size_t t = 0; t < base.size(); ++t) {
    const auto& r = base.row(t);
    d.layout.encode_into(d.inputs.row(t), r.context, r.action, r.outcome);
    d.targets.push_back(augmented.reward(t, i));
  }
  auto s = grid_search(d, grid, derive_seed(seed, "reward_model/" + actor), holdout_fraction);
  return {RewardModel(actor, std::move(s.learner), schema.outcomes), std::move(s.report)};
}

// ---------------------------------------------------------------------------------------

double CateModel::treated_outcome(const Context& context) const {
  return treated_.predict_value(treated_.layout().encode(context));
}

double CateModel::control_outcome(const Context& context) const {
  return control_.predict_value(control_.layout().encode(context));
}

CateModel fit_cate_tlearner(const Dataset& dataset, const LearnerConfig& config) {
  const auto& schema = dataset.schema();
  if (schema.actions.size() != 2) throw ConfigurationError("treatment effect estimation needs exactly two actions");
  InputLayout layout;
  layout.feature_names = schema.feature_names;
  layout.has_group = schema.has_group();
  std::vector<Learner> arms;
  for (std::size_t arm : {std::size_t{1}, std::size_t{0}}) {
    std::vector<std::vector<double>> rows;
    std::vector<double> y;
    for (const auto& r : dataset.rows()) {
      if (r.action != arm) continue;
      rows.push_back(layout.encode(r.context));
      y.push_back(r.outcome);
    }
    if (rows.empty()) throw FitError(std::string(arm ? "treated" : "control") + " arm has no rows");
    arms.push_back(Learner::fit(config, Task::regression, layout, 0, Matrix::from_rows(rows), y));
  }
  return CateModel(std::move(arms[0]), std::move(arms[1]));
}

}  // namespace concord
