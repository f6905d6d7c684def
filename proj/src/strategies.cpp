#include "concord/strategies.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <set>

#include "concord/error.hpp"

namespace concord {

const char* to_string(Phi phi) noexcept {
  switch (phi) {
    case Phi::utilitarian_sum: return "utilitarian_sum";
    case Phi::maximin: return "maximin";
    case Phi::nash_bargaining: return "nash_bargaining";
    case Phi::nash_social_welfare: return "nash_social_welfare";
    case Phi::proportional_fairness: return "proportional_fairness";
    case Phi::kalai_smorodinsky: return "kalai_smorodinsky";
    case Phi::compromise_programming_l2: return "compromise_programming_l2";
  }
  return "unknown";
}

Phi phi_from_string(const std::string& name) {
  static const std::pair<const char*, Phi> aliases[] = {
      {"utilitarian_sum", Phi::utilitarian_sum},
      {"utilitarian", Phi::utilitarian_sum},
      {"maximin", Phi::maximin},
      {"nash_bargaining", Phi::nash_bargaining},
      {"nbs", Phi::nash_bargaining},
      {"nash_social_welfare", Phi::nash_social_welfare},
      {"nsw", Phi::nash_social_welfare},
      {"proportional_fairness", Phi::proportional_fairness},
      {"pf", Phi::proportional_fairness},
      {"kalai_smorodinsky", Phi::kalai_smorodinsky},
      {"ks", Phi::kalai_smorodinsky},
      {"compromise_programming_l2", Phi::compromise_programming_l2},
      {"cp_l2", Phi::compromise_programming_l2},
      {"cp", Phi::compromise_programming_l2},
  };
  for (const auto& [alias, phi] : aliases) {
    if (name == alias) return phi;
  }
  throw ConfigurationError("unknown compromise function '" + name + "'");
}

const char* to_string(Selector selector) noexcept { return selector == Selector::argmax ? "argmax" : "softmax"; }

const char* to_string(StrategyKind kind) noexcept {
  switch (kind) {
    case StrategyKind::agent_agnostic: return "agent_agnostic";
    case StrategyKind::single_agent: return "single_agent";
    case StrategyKind::oracle: return "oracle";
    case StrategyKind::compromise: return "compromise";
  }
  return "unknown";
}

namespace {

std::vector<double> param_or(const std::optional<std::vector<double>>& given, std::size_t n, const char* what,
                             auto&& fallback) {
  if (given) {
    if (given->size() != n) {
      throw DimensionError(std::string(what) + " has " + std::to_string(given->size()) + " entries, expected " +
                           std::to_string(n));
    }
    return *given;
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = fallback(i);
  return out;
}

}  // namespace

std::vector<double> score_actions(Phi phi, const ExpectedRewardMatrix& e, const RuleParams& params) {
  const std::size_t n = e.actors();
  const std::size_t k = e.actions();
  if (n == 0 || k == 0) throw ValidationError("expected reward matrix must be non-empty");
  for (double v : e.values.data()) {
    if (std::isnan(v)) throw ValidationError("expected reward matrix contains NaN");
  }
  if (!(params.floor > 0.0)) throw ParameterError("floor must be positive");

  auto row_min = [&](std::size_t i) {
    double m = e(i, 0);
    for (std::size_t a = 1; a < k; ++a) m = std::min(m, e(i, a));
    return m;
  };
  auto row_max = [&](std::size_t i) {
    double m = e(i, 0);
    for (std::size_t a = 1; a < k; ++a) m = std::max(m, e(i, a));
    return m;
  };

  std::vector<double> s(k, 0.0);
  switch (phi) {
    case Phi::utilitarian_sum:
      for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t i = 0; i < n; ++i) s[a] += e(i, a);
      }
      break;
    case Phi::maximin:
      for (std::size_t a = 0; a < k; ++a) {
        double m = e(0, a);
        for (std::size_t i = 1; i < n; ++i) m = std::min(m, e(i, a));
        s[a] = m;
      }
      break;
    case Phi::nash_bargaining: {
      const auto d = param_or(params.disagreement, n, "disagreement point",
                              [&](std::size_t i) { return row_min(i) - kDisagreementOffset; });
      for (std::size_t a = 0; a < k; ++a) {
        double p = 1.0;
        for (std::size_t i = 0; i < n; ++i) p *= std::max(e(i, a) - d[i], params.floor);
        s[a] = p;
      }
      break;
    }
    case Phi::nash_social_welfare:
      for (std::size_t a = 0; a < k; ++a) {
        double p = 1.0;
        for (std::size_t i = 0; i < n; ++i) p *= std::max(e(i, a), params.floor);
        s[a] = p;
      }
      break;
    case Phi::proportional_fairness:
      for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t i = 0; i < n; ++i) s[a] += std::log(std::max(e(i, a), params.floor));
      }
      break;
    case Phi::kalai_smorodinsky: {
      const auto d = param_or(params.disagreement, n, "disagreement point",
                              [&](std::size_t i) { return row_min(i) - kDisagreementOffset; });
      const auto u = param_or(params.ideal, n, "ideal point", row_max);
      for (std::size_t i = 0; i < n; ++i) {
        if (!(u[i] > d[i])) {
          throw ParameterError("degenerate actor " + std::to_string(i) + ": ideal point does not exceed disagreement point");
        }
      }
      for (std::size_t a = 0; a < k; ++a) {
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) m = std::min(m, (e(i, a) - d[i]) / (u[i] - d[i]));
        s[a] = m;
      }
      break;
    }
    case Phi::compromise_programming_l2: {
      const auto u = param_or(params.ideal, n, "ideal point", row_max);
      const auto w = param_or(params.weights, n, "weights", [](std::size_t) { return 1.0; });
      for (double wi : w) {
        if (!(wi >= 0.0)) throw ParameterError("compromise weights must be non-negative");
      }
      for (std::size_t a = 0; a < k; ++a) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += w[i] * (u[i] - e(i, a)) * (u[i] - e(i, a));
        s[a] = -std::sqrt(acc);
      }
      break;
    }
  }
  return s;
}

ActionDistribution select_sharp(std::span<const double> scores) {
  if (scores.empty()) throw ValidationError("cannot select from an empty action set");
  std::size_t best = 0;
  for (std::size_t a = 1; a < scores.size(); ++a) {
    if (scores[a] > scores[best]) best = a;
  }
  ActionDistribution p(scores.size(), 0.0);
  p[best] = 1.0;
  return p;
}

ActionDistribution select_smooth(std::span<const double> scores, double tau) {
  if (scores.empty()) throw ValidationError("cannot select from an empty action set");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ParameterError("softmax temperature must be positive");
  const double top = *std::max_element(scores.begin(), scores.end());
  ActionDistribution p(scores.size());
  double z = 0.0;
  for (std::size_t a = 0; a < scores.size(); ++a) {
    p[a] = std::exp((scores[a] - top) / tau);
    z += p[a];
  }
  for (double& v : p) v /= z;
  return p;
}

ActionDistribution apply_rule(const CompromiseRule& rule, const ExpectedRewardMatrix& e) {
  const auto s = score_actions(rule.phi, e, rule.params);
  return rule.selector == Selector::argmax ? select_sharp(s) : select_smooth(s, rule.params.tau);
}

Strategy Strategy::agent_agnostic(std::string name, std::vector<double> outcome_values) {
  Strategy s;
  s.name = std::move(name);
  s.kind = StrategyKind::agent_agnostic;
  s.outcome_values = std::move(outcome_values);
  return s;
}

Strategy Strategy::single_agent(std::string name, std::size_t actor) {
  Strategy s;
  s.name = std::move(name);
  s.kind = StrategyKind::single_agent;
  s.actor = actor;
  return s;
}

Strategy Strategy::oracle(std::string name, std::vector<std::size_t> oracle_map) {
  Strategy s;
  s.name = std::move(name);
  s.kind = StrategyKind::oracle;
  s.oracle_map = std::move(oracle_map);
  return s;
}

Strategy Strategy::compromise(std::string name, CompromiseRule rule) {
  Strategy s;
  s.name = std::move(name);
  s.kind = StrategyKind::compromise;
  s.rule = std::move(rule);
  return s;
}

ActionDistribution decide(const Strategy& strategy, const DecisionInput& input) {
  const auto& e = input.expected;
  switch (strategy.kind) {
    case StrategyKind::single_agent: {
      if (strategy.actor >= e.actors()) throw ValidationError("single-agent strategy refers to a missing actor");
      const auto row = e.values.row(strategy.actor);
      return select_sharp(row);
    }
    case StrategyKind::agent_agnostic: {
      if (!input.outcome_distribution) throw StateError("agent-agnostic strategy needs the outcome distribution");
      const Matrix& f = *input.outcome_distribution;
      if (f.rows() != e.actions() || f.cols() != strategy.outcome_values.size()) {
        throw DimensionError("outcome distribution shape does not match the agent-agnostic strategy");
      }
      std::vector<double> s(f.rows(), 0.0);
      for (std::size_t a = 0; a < f.rows(); ++a) {
        for (std::size_t o = 0; o < f.cols(); ++o) s[a] += f(a, o) * strategy.outcome_values[o];
      }
      return select_sharp(s);
    }
    case StrategyKind::oracle: {
      if (!input.true_outcome) throw StateError("oracle strategy invoked without the realized outcome");
      if (*input.true_outcome >= strategy.oracle_map.size()) throw ValidationError("realized outcome outside oracle map");
      ActionDistribution p(e.actions(), 0.0);
      p.at(strategy.oracle_map[*input.true_outcome]) = 1.0;
      return p;
    }
    case StrategyKind::compromise:
      return apply_rule(strategy.rule, e);
  }
  throw ValidationError("unknown strategy kind");
}

void validate_strategy_set(std::span<const Strategy> strategies, std::size_t n_actors, std::size_t n_actions,
                           std::size_t n_outcomes) {
  if (strategies.empty()) throw ConfigurationError("strategy set must not be empty");
  std::set<std::string> names;
  for (const auto& s : strategies) {
    if (s.name.empty()) throw ConfigurationError("strategy name must not be empty");
    if (!names.insert(s.name).second) throw ConfigurationError("duplicate strategy name '" + s.name + "'");
    switch (s.kind) {
      case StrategyKind::single_agent:
        if (s.actor >= n_actors) throw ConfigurationError("strategy '" + s.name + "' refers to a missing actor");
        break;
      case StrategyKind::agent_agnostic:
        if (s.outcome_values.size() != n_outcomes) {
          throw ConfigurationError("strategy '" + s.name + "' needs one outcome value per outcome");
        }
        break;
      case StrategyKind::oracle:
        if (s.oracle_map.size() != n_outcomes) throw ConfigurationError("strategy '" + s.name + "' needs one action per outcome");
        for (auto a : s.oracle_map) {
          if (a >= n_actions) throw ConfigurationError("strategy '" + s.name + "' maps to an unknown action");
        }
        break;
      case StrategyKind::compromise: {
        const auto& p = s.rule.params;
        if (s.rule.selector == Selector::softmax && !(p.tau > 0.0)) {
          throw ConfigurationError("strategy '" + s.name + "' needs a positive temperature");
        }
        for (const auto* v : {&p.disagreement, &p.ideal, &p.weights}) {
          if (*v && v->value().size() != n_actors) {
            throw ConfigurationError("strategy '" + s.name + "' has parameters of the wrong length");
          }
        }
        if (p.weights) {
          for (double w : *p.weights) {
            if (!(w >= 0.0)) throw ConfigurationError("strategy '" + s.name + "' has negative weights");
          }
        }
        if (p.disagreement && p.ideal) {
          for (std::size_t i = 0; i < n_actors; ++i) {
            if (!((*p.disagreement)[i] < (*p.ideal)[i])) {
              throw ConfigurationError("strategy '" + s.name + "' has a disagreement point at or above its ideal point");
            }
          }
        }
        break;
      }
    }
  }
}

json to_json(const Strategy& s, const std::vector<std::string>& actors) {
  json j{{"name", s.name}, {"kind", to_string(s.kind)}};
  switch (s.kind) {
    case StrategyKind::single_agent: j["actor"] = actors.at(s.actor); break;
    case StrategyKind::agent_agnostic: j["outcome_values"] = s.outcome_values; break;
    case StrategyKind::oracle: j["oracle_map"] = s.oracle_map; break;
    case StrategyKind::compromise: {
      const auto& p = s.rule.params;
      j["phi"] = to_string(s.rule.phi);
      j["selector"] = to_string(s.rule.selector);
      json params{{"floor", p.floor}};
      if (s.rule.selector == Selector::softmax) params["tau"] = p.tau;
      if (p.disagreement) params["disagreement"] = *p.disagreement;
      if (p.ideal) params["ideal"] = *p.ideal;
      if (p.weights) params["weights"] = *p.weights;
      j["params"] = std::move(params);
      break;
    }
  }
  return j;
}

Strategy strategy_from_json(const JsonCursor& cur, const std::vector<std::string>& actors) {
  const auto name = cur.at("name").as_string();
  const auto kind = cur.at("kind").as_string();
  if (kind == "single_agent") {
    const auto actor = cur.at("actor").as_string();
    auto it = std::find(actors.begin(), actors.end(), actor);
    if (it == actors.end()) cur.at("actor").fail("unknown actor '" + actor + "'");
    return Strategy::single_agent(name, static_cast<std::size_t>(it - actors.begin()));
  }
  if (kind == "agent_agnostic") return Strategy::agent_agnostic(name, cur.at("outcome_values").as_doubles());
  if (kind == "oracle") {
    std::vector<std::size_t> map;
    for (const auto& v : cur.at("oracle_map").items()) map.push_back(v.as_size());
    return Strategy::oracle(name, std::move(map));
  }
  if (kind == "compromise") {
    CompromiseRule rule;
    try {
      rule.phi = phi_from_string(cur.at("phi").as_string());
    } catch (const ConfigurationError& e) {
      cur.at("phi").fail(e.what());
    }
    const auto sel = cur.get_string("selector", "argmax");
    if (sel == "argmax") rule.selector = Selector::argmax;
    else if (sel == "softmax") rule.selector = Selector::softmax;
    else cur.at("selector").fail("unknown selector '" + sel + "'");
    if (auto p = cur.find("params")) {
      rule.params.floor = p->get_double("floor", kDefaultFloor);
      rule.params.tau = p->get_double("tau", 1.0);
      if (auto v = p->find("disagreement")) rule.params.disagreement = v->as_doubles();
      if (auto v = p->find("ideal")) rule.params.ideal = v->as_doubles();
      if (auto v = p->find("weights")) rule.params.weights = v->as_doubles();
    }
    return Strategy::compromise(name, std::move(rule));
  }
  cur.at("kind").fail("unknown strategy kind '" + kind + "'");
}

Strategy parse_strategy_shorthand(const std::string& text, const std::vector<std::string>& actors) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto colon = text.find(':', start);
    parts.push_back(text.substr(start, colon == std::string::npos ? std::string::npos : colon - start));
    if (colon == std::string::npos) break;
    start = colon + 1;
  }
  if (parts[0] == "single_agent") {
    if (parts.size() != 2) throw ConfigurationError("expected single_agent:<actor>, got '" + text + "'");
    auto lower = [](std::string v) {
      for (auto& ch : v) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
      return v;
    };
    auto it = std::find_if(actors.begin(), actors.end(), [&](const std::string& a) { return lower(a) == lower(parts[1]); });
    if (it == actors.end()) throw ConfigurationError("unknown actor '" + parts[1] + "' in '" + text + "'");
    return Strategy::single_agent(text, static_cast<std::size_t>(it - actors.begin()));
  }
  CompromiseRule rule;
  rule.phi = phi_from_string(parts[0]);
  if (parts.size() >= 2) {
    if (parts[1] == "argmax") rule.selector = Selector::argmax;
    else if (parts[1] == "softmax") rule.selector = Selector::softmax;
    else throw ConfigurationError("unknown selector '" + parts[1] + "' in '" + text + "'");
  }
  if (parts.size() >= 3) {
    const auto tau = parse_double(parts[2]);
    if (!tau || !(*tau > 0)) throw ConfigurationError("invalid temperature in '" + text + "'");
    rule.params.tau = *tau;
  }
  if (parts.size() > 3) throw ConfigurationError("too many fields in strategy '" + text + "'");
  return Strategy::compromise(text, std::move(rule));
}

double entropy(std::span<const double> distribution) {
  double h = 0.0;
  for (double p : distribution) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

}  // namespace concord
