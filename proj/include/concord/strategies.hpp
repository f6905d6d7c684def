#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "concord/core_model.hpp"
#include "concord/json_util.hpp"
#include "concord/matrix.hpp"

namespace concord {

enum class Phi {
  utilitarian_sum,
  maximin,
  nash_bargaining,
  nash_social_welfare,
  proportional_fairness,
  kalai_smorodinsky,
  compromise_programming_l2,
};

enum class Selector { argmax, softmax };

const char* to_string(Phi phi) noexcept;
Phi phi_from_string(const std::string& name);
const char* to_string(Selector selector) noexcept;

inline constexpr double kDefaultFloor = 1e-9;
inline constexpr double kDisagreementOffset = 1e-6;

/// Rule parameters. Missing disagreement / ideal points default to per-context
/// min_a E - 1e-6 and max_a E; missing weights default to 1.
struct RuleParams {
  std::optional<std::vector<double>> disagreement;
  std::optional<std::vector<double>> ideal;
  std::optional<std::vector<double>> weights;
  double tau = 1.0;
  double floor = kDefaultFloor;

  friend bool operator==(const RuleParams&, const RuleParams&) = default;
};

struct CompromiseRule {
  Phi phi = Phi::utilitarian_sum;
  Selector selector = Selector::argmax;
  RuleParams params;

  friend bool operator==(const CompromiseRule&, const CompromiseRule&) = default;
};

/// Probabilities over actions.
using ActionDistribution = std::vector<double>;

/// Per-action score, higher is better for every Phi.
std::vector<double> score_actions(Phi phi, const ExpectedRewardMatrix& e, const RuleParams& params = {});

ActionDistribution select_sharp(std::span<const double> scores);
ActionDistribution select_smooth(std::span<const double> scores, double tau);
ActionDistribution apply_rule(const CompromiseRule& rule, const ExpectedRewardMatrix& e);

enum class StrategyKind { agent_agnostic, single_agent, oracle, compromise };

const char* to_string(StrategyKind kind) noexcept;

struct Strategy {
  std::string name;
  StrategyKind kind = StrategyKind::compromise;
  /// single_agent: actor position.
  std::size_t actor = 0;
  /// agent_agnostic: desirability value of every outcome class or bin.
  std::vector<double> outcome_values;
  /// oracle: optimal action for every outcome class or bin.
  std::vector<std::size_t> oracle_map;
  CompromiseRule rule;

  static Strategy agent_agnostic(std::string name, std::vector<double> outcome_values);
  static Strategy single_agent(std::string name, std::size_t actor);
  static Strategy oracle(std::string name, std::vector<std::size_t> oracle_map);
  static Strategy compromise(std::string name, CompromiseRule rule);

  friend bool operator==(const Strategy&, const Strategy&) = default;
};

/// Everything a strategy may look at for one context.
struct DecisionInput {
  const ExpectedRewardMatrix& expected;
  /// |A| x |O| predicted outcome distribution; required by agent-agnostic strategies.
  const Matrix* outcome_distribution = nullptr;
  /// Realized outcome class or bin; required by the oracle.
  std::optional<std::size_t> true_outcome;
};

ActionDistribution decide(const Strategy& strategy, const DecisionInput& input);

/// Names must be unique; order is the tie-break order.
void validate_strategy_set(std::span<const Strategy> strategies, std::size_t n_actors, std::size_t n_actions,
                           std::size_t n_outcomes);

json to_json(const Strategy& strategy, const std::vector<std::string>& actors);
Strategy strategy_from_json(const JsonCursor& cursor, const std::vector<std::string>& actors);

/// Parses shorthand such as "single_agent:Bank", "maximin", "nbs:softmax:0.5".
Strategy parse_strategy_shorthand(const std::string& text, const std::vector<std::string>& actors);

double entropy(std::span<const double> distribution);

}  // namespace concord
