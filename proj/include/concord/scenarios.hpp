#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "concord/core_model.hpp"
#include "concord/evaluation.hpp"
#include "concord/json_util.hpp"
#include "concord/strategies.hpp"

namespace concord {

enum class RewardVariant { balanced, strictest };

inline constexpr int kScenarioSchemaVersion = 1;

struct LendingParams {
  double full_repayment_rate = 0.6;
  double vulnerable_share = 0.3;
  double partial_cut = 1.5;       // ordered-logit gap between the two thresholds
  double lower_amount_shift = 0.5;
};

struct HealthcareParams {
  double treatment_effect = 4.0;
  bool heterogeneous = true;
  double treatment_cost = 0.1;
  double equity_multiplier = 1.2;
  double outcome_noise = 2.0;
  double disadvantaged_share = 0.35;
  std::vector<double> bin_edges;  // empty: 60..130 in steps of 5
};

struct ScenarioSpec {
  std::string name = "lending";
  std::size_t rows = 1000;
  std::uint64_t seed = 0;
  double noise = 0.05;
  RewardVariant variant = RewardVariant::balanced;
  LendingParams lending;
  HealthcareParams healthcare;
};

ScenarioSpec scenario_spec_from_json(const json& doc);
json to_json(const ScenarioSpec& spec);

Schema scenario_schema(const ScenarioSpec& spec);
std::vector<std::string> scenario_actors(const std::string& name);

struct GeneratedScenario {
  AugmentedDataset data;
  /// Ground truth: lending oracle action per row, healthcare true effect per row.
  std::vector<std::size_t> oracle_actions;
  std::vector<double> true_effect;
  json truth;
};

GeneratedScenario generate_lending(const ScenarioSpec& spec);
GeneratedScenario generate_healthcare(const ScenarioSpec& spec);
GeneratedScenario generate(const ScenarioSpec& spec);

namespace lending {

inline constexpr std::size_t kGrant = 0, kGrantLower = 1, kNotGrant = 2;
inline constexpr std::size_t kFully = 0, kPartially = 1, kNotRepaid = 2;
inline constexpr std::size_t kBank = 0, kApplicant = 1, kRegulator = 2;

/// Net profit per unit of the full loan amount.
double profit(std::size_t action, std::size_t outcome);
/// Noise-free reward of `actor`; group 1 is the vulnerable group.
double reward(std::size_t actor, std::size_t action, std::size_t outcome, int group, RewardVariant variant);
std::vector<std::size_t> oracle_map();
/// P(outcome | features, action) under the generator's ordered logit.
std::vector<double> outcome_probabilities(std::span<const double> features, std::size_t action, double intercept,
                                          const LendingParams& params);

}  // namespace lending

namespace healthcare {

inline constexpr std::size_t kControl = 0, kTreat = 1;
inline constexpr std::size_t kProvider = 0, kPolicy = 1, kParent = 2;
inline constexpr std::size_t kFeatures = 25;

std::vector<double> default_bin_edges();
double baseline(std::span<const double> features, int group);
double effect(std::span<const double> features, const HealthcareParams& params);
double reward(std::size_t actor, std::size_t action, double outcome, int group, const HealthcareParams& params,
              std::span<const double> edges);

}  // namespace healthcare

std::vector<Metric> case_metrics(const ScenarioSpec& spec);
std::vector<Strategy> default_strategies(const ScenarioSpec& spec);

}  // namespace concord
