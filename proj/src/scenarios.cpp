#include "concord/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "concord/error.hpp"
#include "concord/rng.hpp"

namespace concord {

namespace {

const std::vector<std::string> kLendingActors{"Bank", "Applicant", "Regulator"};
const std::vector<std::string> kLendingActions{"Grant", "Grant_Lower", "Not_Grant"};
const std::vector<std::string> kLendingOutcomes{"Fully_Repaid", "Partially_Repaid", "Not_Repaid"};
const std::vector<std::string> kLendingFeatures{"credit_score", "income", "debt_ratio"};

const std::vector<std::string> kHealthActors{"Provider", "Policy_Maker", "Parent"};
const std::vector<std::string> kHealthActions{"Control", "Treat"};

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

std::vector<std::string> health_features() {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < healthcare::kFeatures; ++j) names.push_back("x" + std::to_string(j));
  return names;
}

void expect_labels(const JsonCursor& cur, const std::string& key, const std::vector<std::string>& expected) {
  if (auto v = cur.find(key)) {
    if (v->as_strings() != expected) {
      std::string list;
      for (const auto& e : expected) list += (list.empty() ? "" : ", ") + e;
      v->fail("scenario '" + cur.at("scenario").as_string() + "' requires " + key + " [" + list + "]");
    }
  }
}

double uniform_noise(Rng& rng, double amplitude) {
  if (amplitude == 0.0) return 0.0;
  return std::uniform_real_distribution<double>(-amplitude, amplitude)(rng);
}

}  // namespace

std::vector<std::string> scenario_actors(const std::string& name) {
  if (name == "lending") return kLendingActors;
  if (name == "healthcare") return kHealthActors;
  throw ConfigurationError("unknown scenario '" + name + "'");
}

ScenarioSpec scenario_spec_from_json(const json& doc) {
  JsonCursor cur(doc);
  const auto version = cur.get_int("version", kScenarioSchemaVersion);
  if (version != kScenarioSchemaVersion) {
    cur.at("version").fail("unsupported scenario schema version " + std::to_string(version));
  }
  ScenarioSpec s;
  s.name = cur.at("scenario").as_string();
  if (s.name != "lending" && s.name != "healthcare") cur.at("scenario").fail("unknown scenario '" + s.name + "'");
  s.rows = static_cast<std::size_t>(cur.get_int("rows", 1000));
  if (s.rows == 0) cur.at("rows").fail("rows must be positive");
  s.seed = static_cast<std::uint64_t>(cur.get_int("seed", 0));
  s.noise = cur.get_double("noise", 0.05);
  if (!(s.noise >= 0.0 && s.noise <= 0.5)) cur.at("noise").fail("noise amplitude must lie in [0, 0.5]");
  const auto variant = cur.get_string("variant", "balanced");
  if (variant == "balanced") s.variant = RewardVariant::balanced;
  else if (variant == "strictest") s.variant = RewardVariant::strictest;
  else cur.at("variant").fail("unknown reward variant '" + variant + "'");

  if (s.name == "lending") {
    expect_labels(cur, "actors", kLendingActors);
    expect_labels(cur, "actions", kLendingActions);
    expect_labels(cur, "outcomes", kLendingOutcomes);
    if (auto p = cur.find("params")) {
      auto& l = s.lending;
      l.full_repayment_rate = p->get_double("full_repayment_rate", l.full_repayment_rate);
      l.vulnerable_share = p->get_double("vulnerable_share", l.vulnerable_share);
      l.partial_cut = p->get_double("partial_cut", l.partial_cut);
      l.lower_amount_shift = p->get_double("lower_amount_shift", l.lower_amount_shift);
      if (!(l.full_repayment_rate > 0.0 && l.full_repayment_rate < 1.0)) {
        p->at("full_repayment_rate").fail("must lie in (0, 1)");
      }
      if (!(l.vulnerable_share >= 0.0 && l.vulnerable_share <= 1.0)) p->at("vulnerable_share").fail("must lie in [0, 1]");
      if (!(l.partial_cut > 0.0)) p->at("partial_cut").fail("must be positive");
    }
  } else {
    expect_labels(cur, "actors", kHealthActors);
    expect_labels(cur, "actions", kHealthActions);
    if (auto p = cur.find("params")) {
      auto& h = s.healthcare;
      h.treatment_effect = p->get_double("treatment_effect", h.treatment_effect);
      h.heterogeneous = p->get_bool("heterogeneous", h.heterogeneous);
      h.treatment_cost = p->get_double("treatment_cost", h.treatment_cost);
      h.equity_multiplier = p->get_double("equity_multiplier", h.equity_multiplier);
      h.outcome_noise = p->get_double("outcome_noise", h.outcome_noise);
      h.disadvantaged_share = p->get_double("disadvantaged_share", h.disadvantaged_share);
      if (auto e = p->find("bin_edges")) h.bin_edges = e->as_doubles();
      if (!(h.treatment_cost >= 0.0)) p->at("treatment_cost").fail("must be non-negative");
      if (!(h.equity_multiplier >= 1.0)) p->at("equity_multiplier").fail("must be at least 1");
      if (!(h.outcome_noise >= 0.0)) p->at("outcome_noise").fail("must be non-negative");
      if (!(h.disadvantaged_share >= 0.0 && h.disadvantaged_share <= 1.0)) {
        p->at("disadvantaged_share").fail("must lie in [0, 1]");
      }
    }
    if (auto o = cur.find("bin_edges")) s.healthcare.bin_edges = o->as_doubles();
    try {
      scenario_schema(s);
    } catch (const ValidationError& e) {
      cur.fail(e.what());
    }
  }
  return s;
}

json to_json(const ScenarioSpec& s) {
  json j{{"version", kScenarioSchemaVersion},
         {"scenario", s.name},
         {"rows", s.rows},
         {"seed", s.seed},
         {"noise", s.noise},
         {"variant", s.variant == RewardVariant::balanced ? "balanced" : "strictest"}};
  if (s.name == "lending") {
    j["params"] = {{"full_repayment_rate", s.lending.full_repayment_rate},
                   {"vulnerable_share", s.lending.vulnerable_share},
                   {"partial_cut", s.lending.partial_cut},
                   {"lower_amount_shift", s.lending.lower_amount_shift}};
  } else {
    const auto& h = s.healthcare;
    j["params"] = {{"treatment_effect", h.treatment_effect},
                   {"heterogeneous", h.heterogeneous},
                   {"treatment_cost", h.treatment_cost},
                   {"equity_multiplier", h.equity_multiplier},
                   {"outcome_noise", h.outcome_noise},
                   {"disadvantaged_share", h.disadvantaged_share},
                   {"bin_edges", h.bin_edges.empty() ? healthcare::default_bin_edges() : h.bin_edges}};
  }
  return j;
}

Schema scenario_schema(const ScenarioSpec& s) {
  if (s.name == "lending") {
    return Schema{kLendingFeatures, ActionSpace(kLendingActions), OutcomeSpace::discrete(kLendingOutcomes), "group",
                  kLendingActors};
  }
  if (s.name == "healthcare") {
    const auto edges = s.healthcare.bin_edges.empty() ? healthcare::default_bin_edges() : s.healthcare.bin_edges;
    return Schema{health_features(), ActionSpace(kHealthActions), OutcomeSpace::continuous(edges), "group",
                  kHealthActors};
  }
  throw ConfigurationError("unknown scenario '" + s.name + "'");
}

// ---------------------------------------------------------------------------------------
// Lending

namespace lending {

double profit(std::size_t action, std::size_t outcome) {
  static const double table[3][3] = {{0.20, -0.10, -1.0}, {0.05, -0.05, -0.55}, {0.0, 0.0, 0.0}};
  return table[action][outcome];
}

double reward(std::size_t actor, std::size_t action, std::size_t outcome, int group, RewardVariant variant) {
  if (actor > 2 || action > 2 || outcome > 2) throw ValidationError("lending reward index out of range");
  const bool vulnerable = group == 1;
  if (variant == RewardVariant::strictest) {
    if (actor == kBank) {
      if (action == kNotGrant) return 0.6;
      if (outcome != kFully) return 0.0;
      return action == kGrant ? 1.0 : 0.8;
    }
    if (actor == kApplicant) {
      static const double a[3] = {1.0, 0.6, 0.0};
      return a[action];
    }
  }
  switch (actor) {
    case kBank:
      return (profit(action, outcome) + 1.0) / 1.2;
    case kApplicant: {
      static const double a[3][3] = {{1.0, 0.6, 0.2}, {0.75, 0.6, 0.35}, {0.5, 0.5, 0.5}};
      return a[action][outcome];
    }
    default: {
      static const double r[3][3] = {{0.9, 0.5, 0.1}, {0.8, 0.7, 0.4}, {0.55, 0.55, 0.55}};
      if (!vulnerable) return r[action][outcome];
      if (action == kNotGrant) return 0.3;
      return r[action][outcome] + 0.1;
    }
  }
}

std::vector<std::size_t> oracle_map() { return {kGrant, kGrantLower, kNotGrant}; }

namespace {

double linear_index(std::span<const double> x, std::size_t action, double intercept, const LendingParams& p) {
  const double z_cs = (x[0] - 680.0) / 60.0;
  const double z_inc = (x[1] - 55.0) / 15.0;
  const double z_dr = (x[2] - 0.35) / 0.12;
  double eta = intercept + 1.2 * z_cs + 0.6 * z_inc - 0.8 * z_dr;
  if (action == kGrantLower) eta += p.lower_amount_shift;
  return eta;
}

}  // namespace

std::vector<double> outcome_probabilities(std::span<const double> features, std::size_t action, double intercept,
                                          const LendingParams& params) {
  if (features.size() != 3) throw DimensionError("lending contexts have 3 features");
  const double eta = linear_index(features, action, intercept, params);
  const double full = sigmoid(eta);
  const double not_repaid = 1.0 - sigmoid(eta + params.partial_cut);
  return {full, std::max(0.0, 1.0 - full - not_repaid), not_repaid};
}

}  // namespace lending

GeneratedScenario generate_lending(const ScenarioSpec& spec) {
  if (spec.name != "lending") throw ConfigurationError("generate_lending called with scenario '" + spec.name + "'");
  if (!(spec.noise >= 0.0 && spec.noise <= 0.5)) throw ValidationError("noise amplitude must lie in [0, 0.5]");
  const auto& p = spec.lending;
  Rng feat_rng = make_rng(spec.seed, "lending/features");
  Rng act_rng = make_rng(spec.seed, "lending/actions");
  Rng out_rng = make_rng(spec.seed, "lending/outcomes");
  Rng noise_rng = make_rng(spec.seed, "lending/noise");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> action_pick(0, 2);

  const std::size_t n = spec.rows;
  std::vector<Context> contexts(n);
  std::vector<std::size_t> actions(n);
  for (std::size_t t = 0; t < n; ++t) {
    const int g = unit(feat_rng) < p.vulnerable_share ? 1 : 0;
    const double cs = std::clamp(680.0 - 40.0 * g + 60.0 * normal(feat_rng), 300.0, 850.0);
    const double inc = std::max(5.0, 55.0 - 12.0 * g + 15.0 * normal(feat_rng));
    const double dr = std::clamp(0.35 + 0.08 * g + 0.12 * normal(feat_rng), 0.0, 1.0);
    contexts[t] = Context{{cs, inc, dr}, g};
    actions[t] = action_pick(act_rng);
  }

  // The logged-action Grant_Lower shift raises repayment; Not_Grant outcomes are the Grant counterfactual.
  auto outcome_action = [](std::size_t a) { return a == lending::kNotGrant ? lending::kGrant : a; };
  auto mean_full = [&](double b0) {
    double acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      acc += lending::outcome_probabilities(contexts[t].features, outcome_action(actions[t]), b0, p)[0];
    }
    return acc / static_cast<double>(n);
  };
  double lo = -20.0, hi = 20.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mean_full(mid) < p.full_repayment_rate ? lo : hi) = mid;
  }
  const double intercept = 0.5 * (lo + hi);

  const auto schema = scenario_schema(spec);
  std::vector<Observation> rows;
  std::vector<std::vector<double>> rewards;
  std::vector<std::size_t> oracle(n);
  const auto map = lending::oracle_map();
  for (std::size_t t = 0; t < n; ++t) {
    const auto probs = lending::outcome_probabilities(contexts[t].features, outcome_action(actions[t]), intercept, p);
    const double u = unit(out_rng);
    std::size_t o = u < probs[0] ? 0 : (u < probs[0] + probs[1] ? 1 : 2);
    rows.push_back(Observation{contexts[t], actions[t], static_cast<double>(o)});
    std::vector<double> r(3);
    for (std::size_t i = 0; i < 3; ++i) {
      r[i] = std::clamp(lending::reward(i, actions[t], o, *contexts[t].group, spec.variant) +
                            uniform_noise(noise_rng, spec.noise),
                        0.0, 1.0);
    }
    rewards.push_back(std::move(r));
    oracle[t] = map[o];
  }

  GeneratedScenario g{AugmentedDataset(Dataset(schema, std::move(rows)), StakeholderSet(kLendingActors),
                                       std::move(rewards)),
                      oracle, {}, {}};
  g.truth = {{"version", kScenarioSchemaVersion},
             {"scenario", "lending"},
             {"seed", spec.seed},
             {"rows", n},
             {"intercept", intercept},
             {"oracle_map", {{"Fully_Repaid", "Grant"}, {"Partially_Repaid", "Grant_Lower"}, {"Not_Repaid", "Not_Grant"}}},
             {"oracle_actions", oracle}};
  return g;
}

// ---------------------------------------------------------------------------------------
// Healthcare

namespace healthcare {

std::vector<double> default_bin_edges() {
  std::vector<double> e;
  for (int v = 60; v <= 130; v += 5) e.push_back(v);
  return e;
}

double baseline(std::span<const double> x, int group) {
  if (x.size() != kFeatures) throw DimensionError("healthcare contexts have 25 features");
  return 92.0 + 4.0 * x[0] - 3.0 * x[1] + 2.0 * x[2] + 1.5 * x[4] + 3.0 * x[7] - 2.0 * x[8] + 1.0 * x[12] -
         4.0 * (group == 1 ? 1.0 : 0.0);
}

double effect(std::span<const double> x, const HealthcareParams& p) {
  if (x.size() != kFeatures) throw DimensionError("healthcare contexts have 25 features");
  if (!p.heterogeneous) return p.treatment_effect;
  return p.treatment_effect + 2.0 * x[0] - 1.0 * x[3] + 1.5 * (x[9] - 0.5);
}

double reward(std::size_t actor, std::size_t action, double outcome, int group, const HealthcareParams& p,
              std::span<const double> edges) {
  const double lo = edges.front();
  const double hi = edges.back();
  const double norm = std::clamp((outcome - lo) / (hi - lo), 0.0, 1.0);
  const double treated = action == kTreat ? 1.0 : 0.0;
  switch (actor) {
    case kProvider: return std::clamp(norm - p.treatment_cost * treated, 0.0, 1.0);
    case kPolicy: return std::clamp(norm * (group == 1 ? p.equity_multiplier : 1.0), 0.0, 1.0);
    case kParent: return norm;
    default: throw ValidationError("healthcare reward actor out of range");
  }
}

}  // namespace healthcare

GeneratedScenario generate_healthcare(const ScenarioSpec& spec) {
  if (spec.name != "healthcare") throw ConfigurationError("generate_healthcare called with scenario '" + spec.name + "'");
  if (!(spec.noise >= 0.0 && spec.noise <= 0.5)) throw ValidationError("noise amplitude must lie in [0, 0.5]");
  const auto& p = spec.healthcare;
  const auto schema = scenario_schema(spec);
  const auto edges = schema.outcomes.bin_edges();
  Rng feat_rng = make_rng(spec.seed, "healthcare/features");
  Rng act_rng = make_rng(spec.seed, "healthcare/actions");
  Rng out_rng = make_rng(spec.seed, "healthcare/outcomes");
  Rng noise_rng = make_rng(spec.seed, "healthcare/noise");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<Observation> rows;
  std::vector<std::vector<double>> rewards;
  std::vector<double> effects;
  for (std::size_t t = 0; t < spec.rows; ++t) {
    std::vector<double> x(healthcare::kFeatures);
    for (std::size_t j = 0; j < 6; ++j) x[j] = normal(feat_rng);
    for (std::size_t j = 6; j < healthcare::kFeatures; ++j) {
      const double rate = 0.2 + 0.5 * static_cast<double>((j * 7) % 19) / 18.0;
      x[j] = unit(feat_rng) < rate ? 1.0 : 0.0;
    }
    const int g = unit(feat_rng) < p.disadvantaged_share ? 1 : 0;
    const std::size_t a = unit(act_rng) < 0.5 ? healthcare::kTreat : healthcare::kControl;
    const double tau = healthcare::effect(x, p);
    const double y = healthcare::baseline(x, g) + (a == healthcare::kTreat ? tau : 0.0) + p.outcome_noise * normal(out_rng);
    std::vector<double> r(3);
    for (std::size_t i = 0; i < 3; ++i) {
      r[i] = std::clamp(healthcare::reward(i, a, y, g, p, edges) + uniform_noise(noise_rng, spec.noise), 0.0, 1.0);
    }
    rows.push_back(Observation{Context{std::move(x), g}, a, y});
    rewards.push_back(std::move(r));
    effects.push_back(tau);
  }
  GeneratedScenario g{AugmentedDataset(Dataset(schema, std::move(rows)), StakeholderSet(kHealthActors),
                                       std::move(rewards)),
                      {}, effects, {}};
  g.truth = {{"version", kScenarioSchemaVersion},
             {"scenario", "healthcare"},
             {"seed", spec.seed},
             {"rows", spec.rows},
             {"true_effect", effects}};
  return g;
}

GeneratedScenario generate(const ScenarioSpec& spec) {
  if (spec.name == "lending") return generate_lending(spec);
  if (spec.name == "healthcare") return generate_healthcare(spec);
  throw ConfigurationError("unknown scenario '" + spec.name + "'");
}

// ---------------------------------------------------------------------------------------
// Metrics and strategies

namespace {

Metric ratio_metric(std::string name, Orientation o, std::function<double(std::size_t, std::size_t)> value,
                    std::function<double(std::size_t)> potential) {
  Metric m;
  m.name = std::move(name);
  m.orientation = o;
  m.gamma = 0;
  m.evaluate = [value = std::move(value), potential = std::move(potential)](const MetricInput& in) {
    double got = 0.0, total = 0.0;
    for (std::size_t t = 0; t < in.decisions.rows(); ++t) {
      const auto o = static_cast<std::size_t>(std::llround(in.outcomes[t]));
      const auto p = in.decisions.row(t);
      for (std::size_t a = 0; a < p.size(); ++a) got += p[a] * value(a, o);
      total += potential(o);
    }
    return total > 0.0 ? got / total : 0.0;
  };
  return m;
}

const Matrix& require_predicted(const MetricInput& in, const char* name) {
  if (!in.predicted) throw ConfigurationError(std::string(name) + " needs predicted outcomes");
  return *in.predicted;
}

std::vector<Metric> lending_metrics() {
  std::vector<Metric> m;
  m.push_back(accuracy_metric(lending::oracle_map()));
  m.push_back(Metric{"Precision", Orientation::higher_better, 1, 1.0, [](const MetricInput& in) {
    double hit = 0.0, granted = 0.0;
    for (std::size_t t = 0; t < in.decisions.rows(); ++t) {
      const auto o = static_cast<std::size_t>(std::llround(in.outcomes[t]));
      const double pg = in.decisions(t, lending::kGrant);
      granted += pg;
      if (lending::oracle_map()[o] == lending::kGrant) hit += pg;
    }
    return granted > 0.0 ? hit / granted : 0.0;
  }});
  m.push_back(demographic_parity_metric({1.0, 0.5, 0.0}));
  m.push_back(ratio_metric(
      "Total_Profit", Orientation::higher_better, [](std::size_t a, std::size_t o) { return lending::profit(a, o); },
      [](std::size_t o) {
        double best = 0.0;
        for (std::size_t a = 0; a < 3; ++a) best = std::max(best, lending::profit(a, o));
        return best;
      }));
  m.push_back(ratio_metric(
      "Total_Loss", Orientation::lower_better,
      [](std::size_t a, std::size_t o) { return std::max(0.0, -lending::profit(a, o)); },
      [](std::size_t o) {
        double worst = 0.0;
        for (std::size_t a = 0; a < 3; ++a) worst = std::max(worst, -lending::profit(a, o));
        return worst;
      }));
  m.push_back(kernel_metric(
      "Percent_Grant", Orientation::higher_better, 1,
      [](const MetricInput&, std::size_t, std::span<const double> p) { return p[lending::kGrant]; }, 0.0));
  m.push_back(kernel_metric(
      "Percent_Grant_Lower", Orientation::higher_better, 1,
      [](const MetricInput&, std::size_t, std::span<const double> p) { return p[lending::kGrantLower]; }, 0.0));
  return m;
}

std::vector<Metric> healthcare_metrics(const HealthcareParams& params) {
  using healthcare::kControl;
  using healthcare::kTreat;
  std::vector<Metric> m;
  m.push_back(kernel_metric(
      "Percentage_Treated", Orientation::higher_better, 1,
      [](const MetricInput&, std::size_t, std::span<const double> p) { return p[kTreat]; }, 0.0));

  auto arm_mean = [](const MetricInput& in, std::size_t arm) {
    const Matrix& y = require_predicted(in, "arm mean");
    double num = 0.0, den = 0.0;
    for (std::size_t t = 0; t < in.decisions.rows(); ++t) {
      num += in.decisions(t, arm) * y(t, arm);
      den += in.decisions(t, arm);
    }
    return den > 0.0 ? num / den : 0.0;
  };
  Metric treated{"Mean_outcome_treated", Orientation::higher_better, 1, 1.0,
                 [arm_mean](const MetricInput& in) { return arm_mean(in, kTreat); }};
  Metric control{"Mean_outcome_control", Orientation::higher_better, 1, 1.0,
                 [arm_mean](const MetricInput& in) { return arm_mean(in, kControl); }};
  Metric diff{"Avg_outcome_difference", Orientation::higher_better, 1, 1.0, [arm_mean](const MetricInput& in) {
                return std::abs(arm_mean(in, kTreat) - arm_mean(in, kControl));
              }};
  m.push_back(std::move(treated));
  m.push_back(std::move(control));
  m.push_back(std::move(diff));
  m.push_back(kernel_metric("Total_Cognitive_Score", Orientation::higher_better, 0,
                            [](const MetricInput& in, std::size_t t, std::span<const double> p) {
                              const Matrix& y = require_predicted(in, "Total_Cognitive_Score");
                              double acc = 0.0;
                              for (std::size_t a = 0; a < p.size(); ++a) acc += p[a] * y(t, a);
                              return acc;
                            }));
  const double cost = params.treatment_cost;
  m.push_back(Metric{"Cost_Effectiveness", Orientation::higher_better, 1, 1.0, [cost](const MetricInput& in) {
                       const Matrix& y = require_predicted(in, "Cost_Effectiveness");
                       double gain = 0.0, treated_mass = 0.0;
                       for (std::size_t t = 0; t < in.decisions.rows(); ++t) {
                         gain += in.decisions(t, kTreat) * (y(t, kTreat) - y(t, kControl));
                         treated_mass += in.decisions(t, kTreat);
                       }
                       if (treated_mass <= 0.0 || cost <= 0.0) return 0.0;
                       return gain / (cost * treated_mass);
                     }});
  m.push_back(demographic_parity_metric({0.0, 1.0}));
  return m;
}

std::vector<Strategy> compromise_catalogue() {
  std::vector<Strategy> s;
  const std::pair<const char*, Phi> rules[] = {
      {"Utilitarian", Phi::utilitarian_sum},   {"Maximin", Phi::maximin},
      {"NBS", Phi::nash_bargaining},           {"NSW", Phi::nash_social_welfare},
      {"PF", Phi::proportional_fairness},      {"KS", Phi::kalai_smorodinsky},
      {"CP_L2", Phi::compromise_programming_l2},
  };
  for (const auto& [name, phi] : rules) s.push_back(Strategy::compromise(name, CompromiseRule{phi, Selector::argmax, {}}));
  return s;
}

}  // namespace

std::vector<Metric> case_metrics(const ScenarioSpec& spec) {
  if (spec.name == "lending") return lending_metrics();
  if (spec.name == "healthcare") return healthcare_metrics(spec.healthcare);
  throw ConfigurationError("unknown scenario '" + spec.name + "'");
}

std::vector<Strategy> default_strategies(const ScenarioSpec& spec) {
  std::vector<Strategy> s;
  if (spec.name == "lending") {
    s.push_back(Strategy::oracle("Oracle", lending::oracle_map()));
    s.push_back(Strategy::agent_agnostic("Outcome_Maxim", {1.0, 0.0, 0.0}));
    s.push_back(Strategy::single_agent("Single_Bank", lending::kBank));
    s.push_back(Strategy::single_agent("Single_Applicant", lending::kApplicant));
    s.push_back(Strategy::single_agent("Single_Regulator", lending::kRegulator));
  } else if (spec.name == "healthcare") {
    s.push_back(Strategy::agent_agnostic("Outcome_Maxim", scenario_schema(spec).outcomes.midpoints()));
    s.push_back(Strategy::single_agent("Single_Provider", healthcare::kProvider));
    s.push_back(Strategy::single_agent("Single_Policy_Maker", healthcare::kPolicy));
    s.push_back(Strategy::single_agent("Single_Parent", healthcare::kParent));
  } else {
    throw ConfigurationError("unknown scenario '" + spec.name + "'");
  }
  for (auto& c : compromise_catalogue()) s.push_back(std::move(c));
  return s;
}

}  // namespace concord
