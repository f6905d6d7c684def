#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "concord/core_model.hpp"
#include "concord/evaluation.hpp"
#include "concord/json_util.hpp"
#include "concord/strategies.hpp"

namespace concord {

/// Frozen evaluation context for scoring one rule on a perturbed tensor: metrics, weights,
/// normalization anchors taken from the nominal strategy set, and the per-context truths.
struct ScoreModel {
  std::vector<Metric> metrics;
  std::vector<double> weights;
  std::vector<Anchor> anchors;
  std::vector<double> outcomes;
  std::vector<int> groups;
  Matrix predicted;
  std::optional<RewardTensor> true_rewards;

  double score(const Matrix& decisions) const;
};

/// Coalition V (actor positions), radius delta, tube margin mu.
struct PerturbationSpec {
  std::vector<std::size_t> coalition;
  double delta = 0.0;
  double mu = 0.05;
};

/// Flat tensor indices of the coalition coordinates, ordered by (context, actor, action).
std::vector<std::size_t> coalition_coordinates(const RewardTensor& tensor, const PerturbationSpec& spec);

/// Throws FeasibilityError naming the binding entry unless delta < slack of every coalition entry.
void check_feasibility(const RewardTensor& tensor, const PerturbationSpec& spec);
/// min over coalition entries of min(E - mu, 1 - mu - E).
double tube_slack(const RewardTensor& tensor, const PerturbationSpec& spec);

/// Per-context decisions of `rule` with selector softmax_tau (tau > 0) or argmax (tau == 0).
Matrix rule_decisions(const RewardTensor& tensor, const CompromiseRule& rule, double tau);

/// S^tau; tau == 0 gives the sharp score S^0. The tensor must lie in the tube [mu, 1 - mu].
double smooth_composite_score(const RewardTensor& tensor, const CompromiseRule& rule, double tau,
                              const ScoreModel& model, double mu);

inline constexpr double kGradientStep = 1e-4;
inline constexpr double kMinGradientStep = 1e-8;

/// L1 norm of the coalition-restricted gradient of S^tau by central differences.
double estimate_gradient_l1(const RewardTensor& tensor, const CompromiseRule& rule, double tau, const ScoreModel& model,
                            const PerturbationSpec& spec, double h = kGradientStep);
std::vector<double> estimate_gradient(const RewardTensor& tensor, const CompromiseRule& rule, double tau,
                                      const ScoreModel& model, const PerturbationSpec& spec, double h = kGradientStep);

/// Perturbations over `n_coords` coordinates in the sup-norm ball: the origin, then an even
/// mix of uniform points, {-delta,+delta} corners and {-delta,0,+delta} lattice points.
std::vector<std::vector<double>> sample_ball_points(std::size_t n_coords, double delta, std::size_t count,
                                                    std::uint64_t seed);

RewardTensor apply_perturbation(const RewardTensor& tensor, std::span<const std::size_t> coords,
                                std::span<const double> offsets);

inline constexpr double kSafetyFactor = 1.25;

struct RuleConstants {
  double beta = 0.0;
  double kappa = 0.0;
  double max_ratio = 0.0;      // max |S^tau - S^0| / tau before inflation
  double max_curvature = 0.0;  // max rescaled curvature before inflation
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::vector<double> tau_grid;
};

std::vector<double> default_tau_grid();

RuleConstants estimate_constants(const RewardTensor& tensor, const CompromiseRule& rule, const ScoreModel& model,
                                 const PerturbationSpec& spec, std::span<const double> tau_grid, std::size_t samples,
                                 std::uint64_t seed);

/// (delta^2 beta / (kappa mu^2))^(1/3).
double optimal_temperature(double delta, double beta, double kappa, double mu);
/// g(tau) = delta^2 beta / (2 tau^2 mu^2) + kappa tau.
double temperature_penalty(double tau, double delta, double beta, double kappa, double mu);

struct Certificate {
  double smooth_score = 0.0;
  double sharp_score = 0.0;
  double gradient_l1 = 0.0;
  double gradient_term = 0.0;
  double curvature_term = 0.0;
  double bias_term = 0.0;
  double rlb = 0.0;
  double tau = 0.0;
  std::optional<double> tau_star;
  std::string tau_star_reason;
  std::optional<double> oracle;
  RuleConstants constants;
};

Certificate robust_lower_bound(const RewardTensor& tensor, const CompromiseRule& rule, const ScoreModel& model,
                               const PerturbationSpec& spec, double tau, const RuleConstants& constants);

inline constexpr std::size_t kMaxBruteForceCoords = 12;

double brute_force_worst_case(const RewardTensor& tensor, const CompromiseRule& rule, const ScoreModel& model,
                              const PerturbationSpec& spec, std::uint64_t seed = 0);

/// Estimates constants, derives tau* (re-estimating with tau* in the grid), and certifies at tau*.
Certificate certify_optimal(const RewardTensor& tensor, const CompromiseRule& rule, const ScoreModel& model,
                            const PerturbationSpec& spec, std::span<const double> tau_grid, std::size_t samples,
                            std::uint64_t seed);

struct RankingCertificate {
  std::vector<std::string> rules;
  std::vector<double> sharp_scores;
  std::vector<double> tau_star;
  std::vector<double> errors;
  double min_gap = 0.0;
  double max_error_sum = 0.0;
  bool certified = false;
  std::string reason;
  std::size_t probes = 0;
  std::size_t inversions = 0;
};

RankingCertificate check_ranking_consistency(const RewardTensor& tensor, std::span<const CompromiseRule> rules,
                                             std::span<const std::string> names, const ScoreModel& model,
                                             const PerturbationSpec& spec, std::span<const RuleConstants> constants,
                                             std::size_t probe_samples, std::uint64_t seed);

json to_json(const RuleConstants& c);
json to_json(const Certificate& c);
json to_json(const RankingCertificate& c);

}  // namespace concord
