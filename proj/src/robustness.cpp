#include "concord/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "concord/error.hpp"
#include "concord/rng.hpp"

namespace concord {

double ScoreModel::score(const Matrix& decisions) const {
  if (anchors.size() != metrics.size() || weights.size() != metrics.size()) {
    throw DimensionError("score model needs one anchor and one weight per metric");
  }
  double s = 0.0;
  for (std::size_t h = 0; h < metrics.size(); ++h) {
    if (weights[h] == 0.0) continue;
    MetricInput in{decisions, outcomes, groups, predicted.empty() ? nullptr : &predicted,
                   true_rewards ? &*true_rewards : nullptr};
    s += weights[h] * normalize_with(compute_raw_metric(metrics[h], in), anchors[h], metrics[h].orientation);
  }
  return s;
}

std::vector<std::size_t> coalition_coordinates(const RewardTensor& tensor, const PerturbationSpec& spec) {
  if (spec.coalition.empty()) throw ParameterError("coalition must not be empty");
  std::set<std::size_t> members;
  for (auto i : spec.coalition) {
    if (i >= tensor.actors()) throw ParameterError("coalition member " + std::to_string(i) + " is not an actor");
    if (!members.insert(i).second) throw ParameterError("coalition lists actor " + std::to_string(i) + " twice");
  }
  std::vector<std::size_t> coords;
  for (std::size_t x = 0; x < tensor.contexts(); ++x) {
    for (auto i : members) {
      for (std::size_t a = 0; a < tensor.actions(); ++a) coords.push_back(tensor.flat_index(x, i, a));
    }
  }
  return coords;
}

double tube_slack(const RewardTensor& tensor, const PerturbationSpec& spec) {
  double slack = std::numeric_limits<double>::infinity();
  for (auto c : coalition_coordinates(tensor, spec)) {
    const double e = tensor.values()[c];
    slack = std::min({slack, e - spec.mu, 1.0 - spec.mu - e});
  }
  return slack;
}

void check_feasibility(const RewardTensor& tensor, const PerturbationSpec& spec) {
  if (!(spec.mu > 0.0 && spec.mu < 0.5)) throw ParameterError("tube margin mu must lie in (0, 0.5)");
  if (!(spec.delta >= 0.0) || !std::isfinite(spec.delta)) throw ParameterError("radius delta must be non-negative");
  const auto coords = coalition_coordinates(tensor, spec);
  if (spec.delta == 0.0) return;
  const std::size_t per_context = tensor.actors() * tensor.actions();
  for (auto c : coords) {
    const double e = tensor.values()[c];
    const double slack = std::min(e - spec.mu, 1.0 - spec.mu - e);
    if (!(spec.delta < slack)) {
      const std::size_t x = c / per_context;
      const std::size_t i = (c % per_context) / tensor.actions();
      const std::size_t a = c % tensor.actions();
      throw FeasibilityError("delta " + format_double(spec.delta) + " is not below the tube slack " +
                             format_double(slack) + " of entry (context " + std::to_string(x) + ", actor " +
                             std::to_string(i) + ", action " + std::to_string(a) + ") = " + format_double(e));
    }
  }
}

Matrix rule_decisions(const RewardTensor& tensor, const CompromiseRule& rule, double tau) {
  if (!(tau >= 0.0)) throw ParameterError("temperature must be non-negative");
  const std::size_t n = tensor.actors();
  const std::size_t k = tensor.actions();
  Matrix out(tensor.contexts(), k);
  ExpectedRewardMatrix e{Matrix(n, k)};
  for (std::size_t x = 0; x < tensor.contexts(); ++x) {
    std::copy_n(tensor.values().begin() + static_cast<std::ptrdiff_t>(x * n * k), n * k, e.values.data().begin());
    const auto s = score_actions(rule.phi, e, rule.params);
    const auto p = tau > 0.0 ? select_smooth(s, tau) : select_sharp(s);
    std::copy(p.begin(), p.end(), out.row(x).begin());
  }
  return out;
}

namespace {

double score_unchecked(const RewardTensor& tensor, const CompromiseRule& rule, double tau, const ScoreModel& model) {
  return model.score(rule_decisions(tensor, rule, tau));
}

void require_tube(const RewardTensor& tensor, double mu) {
  constexpr double slop = 1e-12;
  for (double e : tensor.values()) {
    if (!(e >= mu - slop && e <= 1.0 - mu + slop)) {
      throw ValidationError("reward tensor entry " + format_double(e) + " lies outside the tube [" + format_double(mu) +
                            ", " + format_double(1.0 - mu) + "]; clip the tensor first");
    }
  }
}

double sup_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

double smooth_composite_score(const RewardTensor& tensor, const CompromiseRule& rule, double tau,
                              const ScoreModel& model, double mu) {
  require_tube(tensor, mu);
  return score_unchecked(tensor, rule, tau, model);
}

std::vector<double> estimate_gradient(const RewardTensor& tensor, const CompromiseRule& rule, double tau,
                                      const ScoreModel& model, const PerturbationSpec& spec, double h) {
  if (!(tau > 0.0)) throw ParameterError("gradient of the smooth score needs tau > 0");
  if (!(h > 0.0)) throw ParameterError("finite-difference step must be positive");
  const auto coords = coalition_coordinates(tensor, spec);
  std::vector<double> grad;
  grad.reserve(coords.size());
  RewardTensor work = tensor;
  for (auto c : coords) {
    const double e = tensor.values()[c];
    double step = h;
    while (e - step < spec.mu || e + step > 1.0 - spec.mu) {
      step /= 2.0;
      if (step < kMinGradientStep) {
        throw FeasibilityError("finite-difference step cannot stay inside the tube at entry value " + format_double(e));
      }
    }
    work.values()[c] = e + step;
    const double up = score_unchecked(work, rule, tau, model);
    work.values()[c] = e - step;
    const double down = score_unchecked(work, rule, tau, model);
    work.values()[c] = e;
    grad.push_back((up - down) / (2.0 * step));
  }
  return grad;
}

double estimate_gradient_l1(const RewardTensor& tensor, const CompromiseRule& rule, double tau, const ScoreModel& model,
                            const PerturbationSpec& spec, double h) {
  double acc = 0.0;
  for (double g : estimate_gradient(tensor, rule, tau, model, spec, h)) acc += std::abs(g);
  return acc;
}

std::vector<std::vector<double>> sample_ball_points(std::size_t n_coords, double delta, std::size_t count,
                                                    std::uint64_t seed) {
  if (!(delta >= 0.0)) throw ParameterError("radius must be non-negative");
  Rng rng = make_rng(seed, "ball");
  std::uniform_real_distribution<double> uniform(-delta, delta);
  std::uniform_int_distribution<int> sign(0, 1);
  std::uniform_int_distribution<int> lattice(-1, 1);
  std::vector<std::vector<double>> points;
  points.reserve(count);
  if (count > 0) points.emplace_back(n_coords, 0.0);
  for (std::size_t j = 1; j < count; ++j) {
    std::vector<double> p(n_coords);
    switch (j % 3) {
      case 0: for (auto& v : p) v = uniform(rng); break;
      case 1: for (auto& v : p) v = sign(rng) ? delta : -delta; break;
      default: for (auto& v : p) v = lattice(rng) * delta; break;
    }
    points.push_back(std::move(p));
  }
  return points;
}

RewardTensor apply_perturbation(const RewardTensor& tensor, std::span<const std::size_t> coords,
                                std::span<const double> offsets) {
  if (coords.size() != offsets.size()) throw DimensionError("perturbation length differs from the coordinate count");
  RewardTensor out = tensor;
  for (std::size_t j = 0; j < coords.size(); ++j) out.values()[coords[j]] += offsets[j];
  return out;
}

std::vector<double> default_tau_grid() { return {0.001, 0.003, 0.01, 0.03, 0.1, 0.3, 1.0}; }

RuleConstants estimate_constants(const RewardTensor& tensor, const CompromiseRule& rule, const ScoreModel& model,
                                 const PerturbationSpec& spec, std::span<const double> tau_grid, std::size_t samples,
                                 std::uint64_t seed) {
  if (samples < 100) throw ParameterError("constant estimation needs at least 100 samples");
  if (tau_grid.empty()) throw ParameterError("temperature grid must not be empty");
  for (double t : tau_grid) {
    if (!(t > 0.0)) throw ParameterError("temperature grid entries must be positive");
  }
  check_feasibility(tensor, spec);
  require_tube(tensor, spec.mu);

  const auto coords = coalition_coordinates(tensor, spec);
  const auto points = sample_ball_points(coords.size(), spec.delta, samples, seed);
  RuleConstants c;
  c.samples = samples;
  c.seed = seed;
  c.tau_grid.assign(tau_grid.begin(), tau_grid.end());

  std::vector<RewardTensor> perturbed;
  std::vector<double> sharp;
  perturbed.reserve(points.size());
  for (const auto& p : points) {
    perturbed.push_back(apply_perturbation(tensor, coords, p));
    sharp.push_back(score_unchecked(perturbed.back(), rule, 0.0, model));
  }

  for (double tau : tau_grid) {
    std::vector<double> smooth(points.size());
    for (std::size_t j = 0; j < points.size(); ++j) {
      smooth[j] = score_unchecked(perturbed[j], rule, tau, model);
      c.max_ratio = std::max(c.max_ratio, std::abs(smooth[j] - sharp[j]) / tau);
    }
    if (spec.delta == 0.0) continue;
    const auto grad = estimate_gradient(tensor, rule, tau, model, spec);
    const double base = smooth[0];
    for (std::size_t j = 1; j < points.size(); ++j) {
      const double norm = sup_norm(points[j]);
      if (norm <= 0.0) continue;
      double linear = 0.0;
      for (std::size_t q = 0; q < coords.size(); ++q) linear += grad[q] * points[j][q];
      const double remainder = smooth[j] - base - linear;
      const double curvature = 2.0 * std::abs(remainder) / (norm * norm);
      c.max_curvature = std::max(c.max_curvature, curvature * tau * tau * spec.mu * spec.mu);
    }
  }
  c.kappa = kSafetyFactor * c.max_ratio;
  c.beta = kSafetyFactor * c.max_curvature;
  return c;
}

double optimal_temperature(double delta, double beta, double kappa, double mu) {
  if (!(delta > 0.0 && beta > 0.0 && kappa > 0.0 && mu > 0.0)) {
    throw ParameterError("optimal temperature needs delta, beta, kappa and mu all positive");
  }
  return std::cbrt(delta * delta * beta / (kappa * mu * mu));
}

double temperature_penalty(double tau, double delta, double beta, double kappa, double mu) {
  return delta * delta * beta / (2.0 * tau * tau * mu * mu) + kappa * tau;
}

Certificate robust_lower_bound(const RewardTensor& tensor, const CompromiseRule& rule, const ScoreModel& model,
                               const PerturbationSpec& spec, double tau, const RuleConstants& constants) {
  if (!(tau > 0.0)) throw ParameterError("certificate temperature must be positive");
  check_feasibility(tensor, spec);
  require_tube(tensor, spec.mu);
  Certificate cert;
  cert.tau = tau;
  cert.constants = constants;
  cert.smooth_score = score_unchecked(tensor, rule, tau, model);
  cert.sharp_score = score_unchecked(tensor, rule, 0.0, model);
  cert.gradient_l1 = spec.delta > 0.0 ? estimate_gradient_l1(tensor, rule, tau, model, spec) : 0.0;
  cert.gradient_term = spec.delta * cert.gradient_l1;
  cert.curvature_term = spec.delta * spec.delta * constants.beta / (2.0 * tau * tau * spec.mu * spec.mu);
  cert.bias_term = constants.kappa * tau;
  cert.rlb = cert.smooth_score - cert.gradient_term - cert.curvature_term - cert.bias_term;
  if (spec.delta > 0.0 && constants.beta > 0.0 && constants.kappa > 0.0) {
    cert.tau_star = optimal_temperature(spec.delta, constants.beta, constants.kappa, spec.mu);
  } else if (spec.delta == 0.0) {
    cert.tau_star_reason = "delta is zero";
  } else if (constants.kappa == 0.0) {
    cert.tau_star_reason = "estimated bias constant is zero";
  } else {
    cert.tau_star_reason = "estimated curvature constant is zero";
  }
  return cert;
}

double brute_force_worst_case(const RewardTensor& tensor, const CompromiseRule& rule, const ScoreModel& model,
                              const PerturbationSpec& spec, std::uint64_t seed) {
  check_feasibility(tensor, spec);
  require_tube(tensor, spec.mu);
  const auto coords = coalition_coordinates(tensor, spec);
  if (coords.size() > kMaxBruteForceCoords) {
    throw SizeError("brute-force search supports at most " + std::to_string(kMaxBruteForceCoords) +
                    " coalition coordinates, got " + std::to_string(coords.size()));
  }
  const double d = spec.delta;
  double worst = score_unchecked(tensor, rule, 0.0, model);
  if (d == 0.0) return worst;

  const std::size_t n = coords.size();
  RewardTensor work = tensor;
  std::vector<int> digit(n, -1);
  auto set_all = [&] {
    for (std::size_t j = 0; j < n; ++j) work.values()[coords[j]] = tensor.values()[coords[j]] + digit[j] * d;
  };
  set_all();
  while (true) {
    worst = std::min(worst, score_unchecked(work, rule, 0.0, model));
    std::size_t j = 0;
    while (j < n && digit[j] == 1) {
      digit[j] = -1;
      work.values()[coords[j]] = tensor.values()[coords[j]] - d;
      ++j;
    }
    if (j == n) break;
    ++digit[j];
    work.values()[coords[j]] = tensor.values()[coords[j]] + digit[j] * d;
  }

  Rng rng = make_rng(seed, "brute_force");
  std::uniform_real_distribution<double> uniform(-d, d);
  const double candidates[] = {-d, -0.5 * d, 0.0, 0.5 * d, d};
  for (int restart = 0; restart < 9; ++restart) {
    std::vector<double> offset(n);
    for (auto& v : offset) v = uniform(rng);
    for (std::size_t j = 0; j < n; ++j) work.values()[coords[j]] = tensor.values()[coords[j]] + offset[j];
    double current = score_unchecked(work, rule, 0.0, model);
    for (int sweep = 0; sweep < 20; ++sweep) {
      bool improved = false;
      for (std::size_t j = 0; j < n; ++j) {
        double best_v = offset[j];
        for (double v : candidates) {
          work.values()[coords[j]] = tensor.values()[coords[j]] + v;
          const double s = score_unchecked(work, rule, 0.0, model);
          if (s < current) {
            current = s;
            best_v = v;
            improved = true;
          }
        }
        offset[j] = best_v;
        work.values()[coords[j]] = tensor.values()[coords[j]] + best_v;
      }
      if (!improved) break;
    }
    worst = std::min(worst, current);
  }
  return worst;
}

Certificate certify_optimal(const RewardTensor& tensor, const CompromiseRule& rule, const ScoreModel& model,
                            const PerturbationSpec& spec, std::span<const double> tau_grid, std::size_t samples,
                            std::uint64_t seed) {
  auto first = estimate_constants(tensor, rule, model, spec, tau_grid, samples, seed);
  std::vector<double> grid(tau_grid.begin(), tau_grid.end());
  std::sort(grid.begin(), grid.end());
  double tau;
  std::string reason;
  const bool defined = spec.delta > 0.0 && first.beta > 0.0 && first.kappa > 0.0;
  if (defined) {
    tau = optimal_temperature(spec.delta, first.beta, first.kappa, spec.mu);
  } else if (spec.delta == 0.0) {
    tau = grid.front();
    reason = "delta is zero";
  } else if (first.kappa == 0.0) {
    tau = grid.back();
    reason = "estimated bias constant is zero";
  } else {
    tau = grid.front();
    reason = "estimated curvature constant is zero";
  }
  RuleConstants constants = first;
  if (std::find(grid.begin(), grid.end(), tau) == grid.end()) {
    grid.push_back(tau);
    constants = estimate_constants(tensor, rule, model, spec, grid, samples, seed);
  }
  auto cert = robust_lower_bound(tensor, rule, model, spec, tau, constants);
  if (defined) {
    cert.tau_star = tau;
    cert.tau_star_reason.clear();
  } else {
    cert.tau_star.reset();
    cert.tau_star_reason = reason;
  }
  return cert;
}

RankingCertificate check_ranking_consistency(const RewardTensor& tensor, std::span<const CompromiseRule> rules,
                                             std::span<const std::string> names, const ScoreModel& model,
                                             const PerturbationSpec& spec, std::span<const RuleConstants> constants,
                                             std::size_t probe_samples, std::uint64_t seed) {
  if (rules.size() != names.size() || rules.size() != constants.size()) {
    throw DimensionError("ranking check needs one name and one constant set per rule");
  }
  if (rules.empty()) throw ParameterError("ranking check needs at least one rule");
  check_feasibility(tensor, spec);
  require_tube(tensor, spec.mu);

  RankingCertificate rc;
  rc.rules.assign(names.begin(), names.end());
  const std::size_t g_count = rules.size();
  std::vector<double> probe_tau(g_count);
  for (std::size_t g = 0; g < g_count; ++g) {
    rc.sharp_scores.push_back(score_unchecked(tensor, rules[g], 0.0, model));
    const auto& c = constants[g];
    double tau = 0.0;
    double eps = 0.0;
    if (spec.delta > 0.0 && c.beta > 0.0 && c.kappa > 0.0) {
      tau = optimal_temperature(spec.delta, c.beta, c.kappa, spec.mu);
      double kappa = c.kappa;
      // The bias bound must cover tau* itself: re-estimate on the same ball with tau* in the grid.
      if (c.samples >= 100 && std::find(c.tau_grid.begin(), c.tau_grid.end(), tau) == c.tau_grid.end()) {
        auto grid = c.tau_grid;
        grid.push_back(tau);
        kappa = estimate_constants(tensor, rules[g], model, spec, grid, c.samples, c.seed).kappa;
      }
      eps = kappa * tau;
    } else if (c.kappa == 0.0 && !c.tau_grid.empty()) {
      tau = *std::max_element(c.tau_grid.begin(), c.tau_grid.end());
    }
    rc.tau_star.push_back(tau);
    rc.errors.push_back(eps);
    probe_tau[g] = tau;
  }

  rc.min_gap = std::numeric_limits<double>::infinity();
  rc.max_error_sum = 0.0;
  for (std::size_t g = 0; g < g_count; ++g) {
    for (std::size_t h = g + 1; h < g_count; ++h) {
      rc.min_gap = std::min(rc.min_gap, std::abs(rc.sharp_scores[g] - rc.sharp_scores[h]));
      rc.max_error_sum = std::max(rc.max_error_sum, rc.errors[g] + rc.errors[h]);
    }
  }
  if (g_count < 2) {
    rc.certified = true;
    rc.reason = "single rule";
  } else if (!(rc.min_gap > kDegenerateSpread)) {
    rc.certified = false;
    rc.reason = "sharp scores are tied";
  } else {
    rc.certified = rc.min_gap > rc.max_error_sum;
    rc.reason = rc.certified ? "minimum sharp gap exceeds every pairwise error sum"
                             : "minimum sharp gap does not exceed the largest pairwise error sum";
  }

  const auto coords = coalition_coordinates(tensor, spec);
  const auto points = sample_ball_points(coords.size(), spec.delta, probe_samples, derive_seed(seed, "probe"));
  rc.probes = points.size();
  for (const auto& p : points) {
    const auto perturbed = apply_perturbation(tensor, coords, p);
    std::vector<double> smooth(g_count);
    for (std::size_t g = 0; g < g_count; ++g) smooth[g] = score_unchecked(perturbed, rules[g], probe_tau[g], model);
    bool inverted = false;
    for (std::size_t g = 0; g < g_count && !inverted; ++g) {
      for (std::size_t h = 0; h < g_count; ++h) {
        if (rc.sharp_scores[g] > rc.sharp_scores[h] && smooth[g] < smooth[h]) {
          inverted = true;
          break;
        }
      }
    }
    if (inverted) ++rc.inversions;
  }
  return rc;
}

json to_json(const RuleConstants& c) {
  return {{"beta_hat", c.beta},   {"kappa_hat", c.kappa},       {"max_ratio", c.max_ratio},
          {"max_curvature", c.max_curvature}, {"samples", c.samples}, {"seed", c.seed},
          {"safety_factor", kSafetyFactor},   {"tau_grid", c.tau_grid}};
}

json to_json(const Certificate& c) {
  json j{{"smooth_score", c.smooth_score},     {"sharp_score", c.sharp_score},
         {"gradient_l1", c.gradient_l1},       {"gradient_term", c.gradient_term},
         {"curvature_term", c.curvature_term}, {"bias_term", c.bias_term},
         {"rlb", c.rlb},                       {"tau", c.tau},
         {"constants", to_json(c.constants)}};
  j["tau_star"] = c.tau_star ? json(*c.tau_star) : json(nullptr);
  if (!c.tau_star_reason.empty()) j["tau_star_reason"] = c.tau_star_reason;
  j["oracle"] = c.oracle ? json(*c.oracle) : json(nullptr);
  return j;
}

json to_json(const RankingCertificate& c) {
  json gap = c.min_gap == std::numeric_limits<double>::infinity() ? json(nullptr) : json(c.min_gap);
  return {{"rules", c.rules},
          {"sharp_scores", c.sharp_scores},
          {"tau_star", c.tau_star},
          {"errors", c.errors},
          {"min_gap", gap},
          {"max_error_sum", c.max_error_sum},
          {"verdict", c.certified ? "certified" : "not_certified"},
          {"reason", c.reason},
          {"probes", c.probes},
          {"inversions", c.inversions}};
}

}  // namespace concord
