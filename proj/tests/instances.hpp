#pragma once

// Random small certification instances shared by the robustness tests and the acceptance run.

#include <random>
#include <string>
#include <vector>

#include "concord/robustness.hpp"

namespace fixture {

using namespace concord;

struct Instance {
  RewardTensor tensor;
  ScoreModel model;
  PerturbationSpec spec;
};

inline const std::vector<std::pair<std::string, Phi>>& all_rules() {
  static const std::vector<std::pair<std::string, Phi>> rules{
      {"Utilitarian", Phi::utilitarian_sum},  {"Maximin", Phi::maximin},
      {"NBS", Phi::nash_bargaining},          {"NSW", Phi::nash_social_welfare},
      {"PF", Phi::proportional_fairness},     {"KS", Phi::kalai_smorodinsky},
      {"CP_L2", Phi::compromise_programming_l2}};
  return rules;
}

inline CompromiseRule sharp_rule(Phi phi) { return CompromiseRule{phi, Selector::argmax, {}}; }

/// Accuracy against outcome index (outcome o recommends action o) plus mean welfare under the
/// nominal tensor, anchored on the sharp decisions of every rule at the nominal tensor.
inline ScoreModel welfare_accuracy_model(const RewardTensor& tensor, std::vector<double> outcomes,
                                         std::vector<double> weights = {0.5, 0.5}) {
  ScoreModel m;
  std::vector<std::size_t> map(tensor.actions());
  for (std::size_t a = 0; a < map.size(); ++a) map[a] = a;
  m.metrics = {accuracy_metric(map), mean_welfare_metric()};
  m.weights = std::move(weights);
  m.outcomes = std::move(outcomes);
  m.groups.assign(tensor.contexts(), 0);
  m.true_rewards = tensor;
  std::vector<std::vector<double>> raw(m.metrics.size());
  for (const auto& [name, phi] : all_rules()) {
    const auto d = rule_decisions(tensor, sharp_rule(phi), 0.0);
    const MetricInput in{d, m.outcomes, m.groups, nullptr, &*m.true_rewards};
    for (std::size_t h = 0; h < m.metrics.size(); ++h) raw[h].push_back(compute_raw_metric(m.metrics[h], in));
  }
  for (const auto& r : raw) m.anchors.push_back(anchor_of(r));
  return m;
}

/// Entries drawn inside the tube with room for delta, so every draw is feasible.
inline Instance random_instance(std::mt19937_64& rng, std::size_t contexts, std::size_t actors, std::size_t actions,
                                std::vector<std::size_t> coalition, double delta, double mu = 0.05) {
  Instance inst;
  inst.tensor = RewardTensor(contexts, actors, actions);
  const double lo = mu + delta + 1e-3;
  const double hi = 1.0 - mu - delta - 1e-3;
  std::uniform_real_distribution<double> u(lo, hi);
  for (double& v : inst.tensor.values()) v = u(rng);
  std::uniform_int_distribution<std::size_t> outcome(0, actions - 1);
  std::vector<double> outcomes;
  for (std::size_t x = 0; x < contexts; ++x) outcomes.push_back(static_cast<double>(outcome(rng)));
  inst.model = welfare_accuracy_model(inst.tensor, outcomes);
  inst.spec = PerturbationSpec{std::move(coalition), delta, mu};
  return inst;
}

}  // namespace fixture
