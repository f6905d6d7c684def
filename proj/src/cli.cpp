#include "concord/cli.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <sstream>

#include <spdlog/spdlog.h>

#include "concord/csv_io.hpp"
#include "concord/rng.hpp"

namespace concord {

namespace fs = std::filesystem;

namespace {

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::map<std::string, double> weights_from_json(const JsonCursor& cur) {
  if (!cur.node().is_object()) cur.fail("expected an object of metric weights");
  std::map<std::string, double> w;
  for (const auto& [key, value] : cur.node().items()) {
    w[key] = cur.at(key).as_double();
  }
  return w;
}

json outcome_space_json(const OutcomeSpace& o) {
  if (o.is_discrete()) return {{"kind", "discrete"}, {"labels", o.labels()}};
  return {{"kind", "continuous"}, {"bin_edges", o.bin_edges()}};
}

json metric_json(const Metric& m) {
  return {{"name", m.name},
          {"orientation", to_string(m.orientation)},
          {"gamma", m.gamma},
          {"default_weight", m.default_weight}};
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

Matrix matrix_from_json(const JsonCursor& cur) {
  const auto rows = cur.items();
  if (rows.empty()) return Matrix();
  const auto first = rows[0].as_doubles();
  Matrix m(rows.size(), first.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto v = rows[r].as_doubles();
    if (v.size() != first.size()) rows[r].fail("ragged matrix row");
    std::copy(v.begin(), v.end(), m.row(r).begin());
  }
  return m;
}

std::size_t actor_position(const std::vector<std::string>& actors, const std::string& name) {
  for (std::size_t i = 0; i < actors.size(); ++i) {
    if (lower(actors[i]) == lower(name)) return i;
  }
  throw ConfigurationError("unknown actor '" + name + "'");
}

/// Best mean composite among strategies that can run without the realized outcome.
std::optional<std::size_t> deployable_winner(const SelectionResult& sel, std::span<const Strategy> strategies) {
  std::optional<std::size_t> best;
  for (std::size_t d = 0; d < strategies.size(); ++d) {
    if (strategies[d].kind == StrategyKind::oracle) continue;
    if (!best || sel.mean_composite[d] > sel.mean_composite[*best]) best = d;
  }
  return best;
}

std::string pad(const std::string& s, std::size_t width) {
  std::string out = s.size() > width ? s.substr(0, width) : s;
  out.resize(width, ' ');
  return out;
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

std::string selection_table(const SelectionResult& sel, std::span<const Metric> metrics,
                            std::optional<std::size_t> deployable) {
  const std::size_t k = sel.folds.size();
  std::ostringstream os;
  os << pad("strategy", 20);
  std::vector<std::size_t> widths;
  for (const auto& m : metrics) widths.push_back(std::max<std::size_t>(10, m.name.size()));
  for (std::size_t h = 0; h < metrics.size(); ++h) os << ' ' << pad(metrics[h].name, widths[h]);
  os << ' ' << pad("composite", 10) << '\n';
  for (std::size_t d = 0; d < sel.strategies.size(); ++d) {
    os << pad(sel.strategies[d], 20);
    for (std::size_t h = 0; h < metrics.size(); ++h) {
      double mean = 0.0;
      for (const auto& f : sel.folds) mean += f.report.raw[h][d];
      os << ' ' << pad(fixed(mean / static_cast<double>(k)), widths[h]);
    }
    os << ' ' << pad(fixed(sel.mean_composite[d]), 10);
    if (d == sel.winner) os << " *";
    if (deployable && d == *deployable && d != sel.winner) os << " (deployable)";
    os << '\n';
  }
  os << "winner: " << sel.winner_name;
  if (deployable && *deployable != sel.winner) os << "; deployable: " << sel.strategies[*deployable];
  os << '\n';
  return os.str();
}

Context context_from_json(const JsonCursor& cur, const Schema& schema) {
  Context ctx;
  const auto feats = cur.at("features");
  if (feats.node().is_array()) {
    ctx.features = feats.as_doubles();
    if (ctx.features.size() != schema.feature_names.size()) {
      feats.fail("expected " + std::to_string(schema.feature_names.size()) + " feature values");
    }
  } else if (feats.node().is_object()) {
    for (const auto& name : schema.feature_names) ctx.features.push_back(feats.at(name).as_double());
    for (const auto& [key, value] : feats.node().items()) {
      if (std::find(schema.feature_names.begin(), schema.feature_names.end(), key) == schema.feature_names.end()) {
        feats.fail("unknown feature '" + key + "'");
      }
    }
  } else {
    feats.fail("expected an array or object of feature values");
  }
  if (schema.has_group()) {
    const auto g = cur.find("group");
    if (!g) cur.fail("missing group attribute '" + schema.group_column + "'");
    ctx.group = static_cast<int>(g->as_int());
  }
  return ctx;
}

Schema schema_from_store(const JsonCursor& cur) {
  const auto oc = cur.at("outcomes");
  const std::string kind = oc.at("kind").as_string();
  OutcomeSpace outcomes = kind == "discrete" ? OutcomeSpace::discrete(oc.at("labels").as_strings())
                                             : OutcomeSpace::continuous(oc.at("bin_edges").as_doubles());
  return Schema{cur.at("features").as_strings(), ActionSpace(cur.at("actions").as_strings()), std::move(outcomes),
                cur.get_string("group_column", ""), cur.at("actors").as_strings()};
}

}  // namespace

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::feasibility: return kExitInfeasible;
    case ErrorKind::io: return kExitIo;
    default: return kExitValidation;
  }
}

void check_version(const json& doc, std::string_view schema, int version) {
  if (!doc.is_object() || !doc.contains("schema") || doc["schema"] != schema) {
    throw ValidationError("document is not a " + std::string(schema) + " file");
  }
  if (!doc.contains("version") || !doc["version"].is_number_integer()) {
    throw ValidationError(std::string(schema) + " file has no integer version");
  }
  const int got = doc["version"].get<int>();
  if (got != version) {
    throw ValidationError(std::string(schema) + " version " + std::to_string(got) + " is not supported (this build reads version " +
                          std::to_string(version) + "); regenerate it with `concord select` from this build" +
                          (got < version ? "" : ", or upgrade concord"));
  }
}

// ---------------------------------------------------------------------------------------
// Configuration

RunConfig run_config_from_json(const json& doc, const fs::path& base_dir) {
  JsonCursor cur(doc);
  if (!doc.is_object()) cur.fail("run configuration must be an object");
  static const char* known[] = {"version", "scenario", "data", "strategies", "weights", "folds",
                                "seed",    "holdout",  "learners", "fold_assignment", "out"};
  for (const auto& [key, value] : doc.items()) {
    if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) == std::end(known)) {
      cur.fail("unknown field '" + key + "'");
    }
  }
  if (cur.get_int("version", kRunConfigVersion) != kRunConfigVersion) {
    cur.at("version").fail("unsupported run configuration version");
  }
  RunConfig rc;
  if (auto s = cur.find("scenario")) rc.scenario = scenario_spec_from_json(s->node());
  if (auto d = cur.find("data")) {
    fs::path p = d->as_string();
    rc.data = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  }
  if (auto s = cur.find("strategies")) rc.strategies = s->as_strings();
  if (auto w = cur.find("weights")) rc.weights = weights_from_json(*w);
  rc.cv.folds = static_cast<std::size_t>(cur.get_int("folds", 5));
  if (auto s = cur.find("seed")) rc.cv.seed = static_cast<std::uint64_t>(s->as_size());
  rc.cv.holdout_fraction = cur.get_double("holdout", 0.2);
  if (!(rc.cv.holdout_fraction > 0.0 && rc.cv.holdout_fraction < 1.0)) cur.at("holdout").fail("must lie in (0, 1)");
  if (auto l = cur.find("learners")) {
    auto grid = [&](const char* key, std::vector<LearnerConfig>& out) {
      if (auto g = l->find(key)) {
        out.clear();
        for (const auto& item : g->items()) out.push_back(learner_config_from_json(item));
        if (out.empty()) g->fail("learner grid must not be empty");
      }
    };
    grid("outcome", rc.cv.outcome_grid);
    grid("reward", rc.cv.reward_grid);
  }
  if (auto f = cur.find("fold_assignment")) {
    std::vector<std::size_t> a;
    for (const auto& item : f->items()) a.push_back(item.as_size());
    rc.cv.fold_assignment = std::move(a);
  }
  if (auto o = cur.find("out")) rc.out = o->as_string();
  return rc;
}

json to_json(const RunConfig& c) {
  json j{{"version", kRunConfigVersion}, {"scenario", to_json(c.scenario)}};
  if (c.data) j["data"] = c.data->generic_string();
  j["strategies"] = c.strategies;
  j["weights"] = c.weights;
  j["folds"] = c.cv.folds;
  j["seed"] = c.cv.seed;
  j["holdout"] = c.cv.holdout_fraction;
  json outcome = json::array(), reward = json::array();
  for (const auto& l : c.cv.outcome_grid) outcome.push_back(to_json(l));
  for (const auto& l : c.cv.reward_grid) reward.push_back(to_json(l));
  j["learners"] = {{"outcome", outcome}, {"reward", reward}};
  if (c.cv.fold_assignment) j["fold_assignment"] = *c.cv.fold_assignment;
  j["out"] = c.out.generic_string();
  return j;
}

TauPolicy parse_tau_policy(const std::string& text) {
  if (text == "optimal") return {};
  if (text.rfind("fixed:", 0) == 0) {
    const auto v = parse_double(text.substr(6));
    if (!v || !(*v > 0.0) || !std::isfinite(*v)) throw ParameterError("invalid fixed temperature in '" + text + "'");
    return TauPolicy{*v};
  }
  throw ParameterError("temperature policy must be 'optimal' or 'fixed:<value>', got '" + text + "'");
}

std::string to_string(const TauPolicy& p) { return p.fixed ? "fixed:" + format_double(*p.fixed) : "optimal"; }

void parse_delta_option(const std::string& text, CertifyConfig& config) {
  if (text == "auto" || text.rfind("auto:", 0) == 0) {
    double fraction = 0.5;
    if (text.size() > 4) {
      const auto v = parse_double(text.substr(5));
      if (!v || !(*v > 0.0 && *v < 1.0)) throw ParameterError("auto delta fraction must lie in (0, 1)");
      fraction = *v;
    }
    config.auto_fraction = fraction;
    config.deltas.clear();
    return;
  }
  std::vector<double> deltas;
  for (const auto& part : split(text, ',')) {
    const auto v = parse_double(part);
    if (!v || !(*v >= 0.0) || !std::isfinite(*v)) throw ParameterError("invalid delta '" + part + "'");
    deltas.push_back(*v);
  }
  config.deltas = std::move(deltas);
  config.auto_fraction.reset();
}

CertifyConfig certify_config_from_json(const json& doc) {
  JsonCursor root(doc);
  if (!doc.is_object()) root.fail("perturbation spec must be an object");
  JsonCursor cur = doc.contains("perturbation") ? root.at("perturbation") : root;
  if (!cur.node().is_object()) cur.fail("perturbation spec must be an object");
  CertifyConfig c;
  if (auto v = cur.find("coalition")) c.coalition = v->as_strings();
  if (auto v = cur.find("delta")) {
    if (v->node().is_string()) {
      try {
        parse_delta_option(v->as_string(), c);
      } catch (const Error& e) {
        v->fail(e.what());
      }
    } else if (v->node().is_array()) {
      c.deltas = v->as_doubles();
    } else {
      c.deltas = {v->as_double()};
    }
    for (double d : c.deltas) {
      if (!(d >= 0.0) || !std::isfinite(d)) v->fail("delta must be non-negative");
    }
  }
  c.mu = cur.get_double("mu", c.mu);
  if (auto v = cur.find("tau")) {
    if (v->node().is_number()) {
      c.tau.fixed = v->as_double();
      if (!(*c.tau.fixed > 0.0)) v->fail("fixed temperature must be positive");
    } else {
      try {
        c.tau = parse_tau_policy(v->as_string());
      } catch (const Error& e) {
        v->fail(e.what());
      }
    }
  }
  c.oracle = cur.get_bool("oracle", c.oracle);
  c.samples = static_cast<std::size_t>(cur.get_int("samples", static_cast<std::int64_t>(c.samples)));
  c.probe_samples = static_cast<std::size_t>(cur.get_int("probe_samples", static_cast<std::int64_t>(c.probe_samples)));
  if (auto v = cur.find("tau_grid")) c.tau_grid = v->as_doubles();
  c.fold = static_cast<std::size_t>(cur.get_int("fold", 0));
  c.max_contexts = static_cast<std::size_t>(cur.get_int("max_contexts", static_cast<std::int64_t>(c.max_contexts)));
  if (auto v = cur.find("seed")) c.seed = static_cast<std::uint64_t>(v->as_size());
  if (auto v = root.find("weights")) c.weights = weights_from_json(*v);
  if (auto v = cur.find("weights")) c.weights = weights_from_json(*v);
  return c;
}

json to_json(const CertifyConfig& c) {
  json j{{"coalition", c.coalition},       {"mu", c.mu},
         {"tau", to_string(c.tau)},        {"oracle", c.oracle},
         {"samples", c.samples},           {"probe_samples", c.probe_samples},
         {"tau_grid", c.tau_grid},         {"fold", c.fold},
         {"max_contexts", c.max_contexts}, {"seed", c.seed}};
  if (c.auto_fraction) j["delta"] = "auto:" + format_double(*c.auto_fraction);
  else j["delta"] = c.deltas;
  if (!c.weights.empty()) j["weights"] = c.weights;
  return j;
}

std::map<std::string, double> parse_weights_option(const std::string& text) {
  if (text.find('=') == std::string::npos) {
    const json doc = read_json_file(text);
    JsonCursor cur(doc);
    return weights_from_json(doc.is_object() && doc.contains("weights") ? cur.at("weights") : cur);
  }
  std::map<std::string, double> w;
  for (const auto& part : split(text, ',')) {
    const auto eq = part.find('=');
    if (eq == std::string::npos) throw ConfigurationError("expected <metric>=<weight>, got '" + part + "'");
    const auto v = parse_double(trim(part.substr(eq + 1)));
    if (!v) throw ConfigurationError("invalid weight in '" + part + "'");
    w[trim(part.substr(0, eq))] = *v;
  }
  return w;
}

std::vector<Strategy> resolve_strategies(std::span<const std::string> names, const ScenarioSpec& spec) {
  auto catalogue = default_strategies(spec);
  if (names.empty()) return catalogue;
  const auto actors = scenario_actors(spec.name);
  std::vector<Strategy> out;
  for (const auto& name : names) {
    auto it = std::find_if(catalogue.begin(), catalogue.end(), [&](const Strategy& s) { return lower(s.name) == lower(name); });
    if (it != catalogue.end()) out.push_back(*it);
    else out.push_back(parse_strategy_shorthand(name, actors));
  }
  return out;
}

std::vector<double> resolve_weights(const std::map<std::string, double>& weights, std::span<const Metric> metrics) {
  if (weights.empty()) return default_weights(metrics);
  std::vector<double> w(metrics.size(), 0.0);
  for (const auto& [name, value] : weights) {
    auto it = std::find_if(metrics.begin(), metrics.end(), [&](const Metric& m) { return m.name == name; });
    if (it == metrics.end()) throw ConfigurationError("weight given for unknown metric '" + name + "'");
    w[static_cast<std::size_t>(it - metrics.begin())] = value;
  }
  validate_weights(w, metrics.size());
  return w;
}

// ---------------------------------------------------------------------------------------
// generate

GenerateResult cmd_generate(const ScenarioSpec& spec, const fs::path& csv) {
  const auto g = generate(spec);
  GenerateResult r;
  r.csv = csv;
  r.truth = csv.parent_path() / (csv.stem().string() + ".truth.json");
  r.rows = g.data.size();
  if (csv.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(csv.parent_path(), ec);
  }
  write_csv(csv, g.data);
  json truth = g.truth;
  truth["schema"] = "concord.truth";
  truth["version"] = kScenarioSchemaVersion;
  truth["scenario"] = to_json(spec);
  write_json_file(r.truth, truth);
  spdlog::info("generated {} rows of scenario '{}' into {}", r.rows, spec.name, csv.string());
  return r;
}

// ---------------------------------------------------------------------------------------
// select

SelectOutput run_selection(const RunConfig& config) {
  const auto& spec = config.scenario;
  const Schema schema = scenario_schema(spec);
  std::optional<AugmentedDataset> data;
  if (config.data) {
    auto ingested = ingest_csv(*config.data, schema);
    if (!std::holds_alternative<AugmentedDataset>(ingested)) {
      throw ValidationError(config.data->string() + ": no reward columns");
    }
    data = std::get<AugmentedDataset>(std::move(ingested));
  } else {
    data = generate(spec).data;
  }
  const auto strategies = resolve_strategies(config.strategies, spec);
  const auto metrics = case_metrics(spec);
  const auto weights = resolve_weights(config.weights, metrics);
  const auto& actors = data->actors().labels();

  spdlog::info("cross-validating {} strategies over {} rows", strategies.size(), data->size());
  SelectOutput out;
  out.selection = cross_validate_select(*data, strategies, metrics, weights, config.cv);
  const auto& sel = out.selection;
  const auto deployable = deployable_winner(sel, strategies);

  json strategies_json = json::array();
  for (const auto& s : strategies) strategies_json.push_back(to_json(s, actors));
  json metrics_json = json::array();
  json weight_map = json::object();
  for (std::size_t h = 0; h < metrics.size(); ++h) {
    metrics_json.push_back(metric_json(metrics[h]));
    weight_map[metrics[h].name] = weights[h];
  }

  std::vector<std::size_t> ranking(strategies.size());
  for (std::size_t d = 0; d < ranking.size(); ++d) ranking[d] = d;
  std::stable_sort(ranking.begin(), ranking.end(),
                   [&](std::size_t a, std::size_t b) { return sel.mean_composite[a] > sel.mean_composite[b]; });
  std::vector<std::string> ranking_names;
  for (auto d : ranking) ranking_names.push_back(sel.strategies[d]);

  out.summary = {{"winner", sel.winner},
                 {"winner_name", sel.winner_name},
                 {"deployable", deployable ? json(*deployable) : json(nullptr)},
                 {"deployable_name", deployable ? json(sel.strategies[*deployable]) : json(nullptr)},
                 {"strategies", sel.strategies},
                 {"ranking", ranking_names},
                 {"mean_composite", sel.mean_composite},
                 {"fold_composites", sel.fold_composites},
                 {"seed", sel.seed},
                 {"folds", sel.folds.size()}};

  json folds = json::array();
  for (std::size_t f = 0; f < sel.folds.size(); ++f) {
    const auto& fr = sel.folds[f];
    const auto& fd = fr.data;
    json contexts = json::array();
    for (std::size_t t = 0; t < fd.rows.size(); ++t) {
      json e = json::array();
      for (std::size_t i = 0; i < fd.expected.actors(); ++i) {
        std::vector<double> row;
        for (std::size_t a = 0; a < fd.expected.actions(); ++a) row.push_back(fd.expected(t, i, a));
        e.push_back(row);
      }
      const auto pred = fd.predicted.row(t);
      contexts.push_back({{"row", fd.rows[t]},
                          {"E", e},
                          {"outcome", fd.outcomes[t]},
                          {"outcome_bin", fd.outcome_bins[t]},
                          {"group", fd.groups[t]},
                          {"predicted", std::vector<double>(pred.begin(), pred.end())},
                          {"distribution", matrix_json(fd.outcome_distributions[t])}});
    }
    json decisions = json::object();
    for (std::size_t d = 0; d < strategies.size(); ++d) decisions[strategies[d].name] = matrix_json(fr.decisions[d]);
    json models = json::array();
    for (const auto& r : sel.model_reports[f]) models.push_back(to_json(r));
    folds.push_back({{"fold", f},
                     {"report", to_json(fr.report)},
                     {"contexts", contexts},
                     {"decisions", decisions},
                     {"models", models}});
  }

  json outcome_grid = json::array(), reward_grid = json::array();
  for (const auto& l : config.cv.outcome_grid) outcome_grid.push_back(to_json(l));
  for (const auto& l : config.cv.reward_grid) reward_grid.push_back(to_json(l));

  out.bundle = {{"schema", "concord.bundle"},
                {"version", kBundleVersion},
                {"seed", config.cv.seed},
                {"scenario", to_json(spec)},
                {"data", config.data ? json(config.data->generic_string()) : json(nullptr)},
                {"actors", actors},
                {"actions", schema.actions.labels()},
                {"outcomes", outcome_space_json(schema.outcomes)},
                {"features", schema.feature_names},
                {"group_column", schema.group_column},
                {"strategies", strategies_json},
                {"metrics", metrics_json},
                {"weights", weight_map},
                {"learners", {{"outcome", outcome_grid}, {"reward", reward_grid}}},
                {"fold_assignment", sel.fold_assignment},
                {"selection", out.summary},
                {"folds", folds}};

  spdlog::info("fitting deployable models on all {} rows", data->size());
  const auto models = fit_models(*data, config.cv, derive_seed(config.cv.seed, "store"));
  json rewards = json::array();
  for (const auto& r : models.rewards) rewards.push_back(to_json(r));
  json reports = json::array();
  for (const auto& r : models.reports) reports.push_back(to_json(r));
  out.store = {{"schema", "concord.model_store"},
               {"version", kModelStoreVersion},
               {"seed", config.cv.seed},
               {"scenario", to_json(spec)},
               {"actors", actors},
               {"actions", schema.actions.labels()},
               {"outcomes", outcome_space_json(schema.outcomes)},
               {"features", schema.feature_names},
               {"group_column", schema.group_column},
               {"strategies", strategies_json},
               {"selected", deployable ? json(sel.strategies[*deployable]) : json(nullptr)},
               {"outcome_model", to_json(models.outcome)},
               {"reward_models", rewards},
               {"model_reports", reports}};
  out.table = selection_table(sel, metrics, deployable);
  return out;
}

SelectOutput cmd_select(const RunConfig& config) {
  auto out = run_selection(config);
  std::error_code ec;
  fs::create_directories(config.out, ec);
  if (ec) throw IoError("cannot create output directory '" + config.out.string() + "': " + ec.message());
  write_json_file(config.out / "bundle.json", out.bundle);
  write_json_file(config.out / "model_store.json", out.store);
  write_json_file(config.out / "selection.json", out.summary);
  spdlog::info("wrote bundle, model store and selection to {}", config.out.string());
  return out;
}

// ---------------------------------------------------------------------------------------
// recommend

namespace {

struct LoadedStore {
  Schema schema;
  std::vector<Strategy> strategies;
  std::size_t selected = 0;
  OutcomePredictor outcome;
  std::vector<RewardModel> rewards;
};

LoadedStore load_store(const json& store) {
  check_version(store, "concord.model_store", kModelStoreVersion);
  JsonCursor cur(store);
  LoadedStore s{schema_from_store(cur), {}, 0, outcome_predictor_from_json(store.at("outcome_model")), {}};
  for (const auto& item : cur.at("strategies").items()) s.strategies.push_back(strategy_from_json(item, s.schema.actors));
  for (const auto& r : store.at("reward_models")) s.rewards.push_back(reward_model_from_json(r));
  if (s.rewards.size() != s.schema.actors.size()) cur.at("reward_models").fail("expected one reward model per actor");
  const auto sel = cur.at("selected");
  if (sel.node().is_null()) cur.fail("model store has no deployable strategy");
  const std::string name = sel.as_string();
  auto it = std::find_if(s.strategies.begin(), s.strategies.end(), [&](const Strategy& x) { return x.name == name; });
  if (it == s.strategies.end()) sel.fail("selected strategy '" + name + "' is not in the store");
  s.selected = static_cast<std::size_t>(it - s.strategies.begin());
  return s;
}

json recommend_loaded(const LoadedStore& s, const json& context, std::size_t index) {
  const Context ctx = context_from_json(JsonCursor(context, "/" + std::to_string(index)), s.schema);
  Matrix f;
  const auto e = expected_rewards(s.outcome, s.rewards, ctx, &f);
  const DecisionInput input{e, &f, std::nullopt};

  json decisions = json::object();
  for (const auto& st : s.strategies) {
    if (st.kind == StrategyKind::oracle) {
      decisions[st.name] = nullptr;
      continue;
    }
    decisions[st.name] = decide(st, input);
  }
  const auto& chosen = s.strategies[s.selected];
  const auto p = decide(chosen, input);
  const std::size_t a = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());

  std::vector<double> phi;
  std::string phi_kind;
  switch (chosen.kind) {
    case StrategyKind::compromise:
      phi = score_actions(chosen.rule.phi, e, chosen.rule.params);
      phi_kind = to_string(chosen.rule.phi);
      break;
    case StrategyKind::single_agent: {
      const auto row = e.values.row(chosen.actor);
      phi.assign(row.begin(), row.end());
      phi_kind = "expected_reward:" + s.schema.actors[chosen.actor];
      break;
    }
    case StrategyKind::agent_agnostic:
      for (std::size_t k = 0; k < f.rows(); ++k) {
        double acc = 0.0;
        for (std::size_t o = 0; o < f.cols(); ++o) acc += f(k, o) * chosen.outcome_values[o];
        phi.push_back(acc);
      }
      phi_kind = "expected_outcome_value";
      break;
    case StrategyKind::oracle: break;
  }
  return {{"index", index},
          {"strategy", chosen.name},
          {"action", s.schema.actions.label(a)},
          {"action_index", a},
          {"distribution", p},
          {"actors", s.schema.actors},
          {"actions", s.schema.actions.labels()},
          {"E", matrix_json(e.values)},
          {"phi", phi},
          {"phi_kind", phi_kind},
          {"strategy_decisions", decisions}};
}

}  // namespace

json recommend(const json& store, const json& context, std::size_t index) {
  return recommend_loaded(load_store(store), context, index);
}

std::vector<json> cmd_recommend(const json& store, std::istream& in) {
  const auto s = load_store(store);
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  std::vector<json> contexts;
  const json whole = json::parse(text, nullptr, false);
  if (!whole.is_discarded()) {
    if (whole.is_array()) contexts.assign(whole.begin(), whole.end());
    else contexts.push_back(whole);
  } else {
    std::istringstream lines(text);
    std::string line;
    std::size_t no = 0;
    while (std::getline(lines, line)) {
      ++no;
      if (trim(line).empty()) continue;
      try {
        contexts.push_back(json::parse(line));
      } catch (const json::parse_error& e) {
        throw ValidationError("context line " + std::to_string(no) + ": " + e.what());
      }
    }
  }
  std::vector<json> out;
  out.reserve(contexts.size());
  for (std::size_t i = 0; i < contexts.size(); ++i) out.push_back(recommend_loaded(s, contexts[i], i));
  return out;
}

// ---------------------------------------------------------------------------------------
// certify

json cmd_certify(const json& bundle, const CertifyConfig& config) {
  check_version(bundle, "concord.bundle", kBundleVersion);
  JsonCursor cur(bundle);
  const ScenarioSpec spec = scenario_spec_from_json(bundle.at("scenario"));
  const auto actors = cur.at("actors").as_strings();
  std::vector<Strategy> strategies;
  for (const auto& item : cur.at("strategies").items()) strategies.push_back(strategy_from_json(item, actors));

  const auto folds = cur.at("folds").items();
  if (config.fold >= folds.size()) throw ConfigurationError("bundle has no fold " + std::to_string(config.fold));
  const auto fold = folds[config.fold];
  const auto contexts = fold.at("contexts").items();
  std::size_t n = contexts.size();
  if (config.max_contexts > 0) n = std::min(n, config.max_contexts);
  if (n == 0) throw ConfigurationError("fold " + std::to_string(config.fold) + " has no contexts");

  const std::size_t n_actions = cur.at("actions").as_strings().size();
  RewardTensor nominal(n, actors.size(), n_actions);
  ScoreModel model;
  model.metrics = case_metrics(spec);
  model.predicted = Matrix(n, n_actions);
  std::vector<std::size_t> rows;
  for (std::size_t t = 0; t < n; ++t) {
    const auto e = matrix_from_json(contexts[t].at("E"));
    if (e.rows() != actors.size() || e.cols() != n_actions) contexts[t].at("E").fail("expected an actors x actions matrix");
    for (std::size_t i = 0; i < actors.size(); ++i) {
      for (std::size_t a = 0; a < n_actions; ++a) nominal(t, i, a) = e(i, a);
    }
    model.outcomes.push_back(contexts[t].at("outcome").as_double());
    model.groups.push_back(static_cast<int>(contexts[t].at("group").as_int()));
    const auto pred = contexts[t].at("predicted").as_doubles();
    if (pred.size() != n_actions) contexts[t].at("predicted").fail("expected one value per action");
    std::copy(pred.begin(), pred.end(), model.predicted.row(t).begin());
    rows.push_back(contexts[t].at("row").as_size());
  }

  std::map<std::string, double> weight_map = config.weights;
  if (weight_map.empty()) weight_map = weights_from_json(cur.at("weights"));
  model.weights = resolve_weights(weight_map, model.metrics);

  // Anchors frozen from the bundle's strategy set on the certified contexts.
  const auto decisions = fold.at("decisions");
  std::vector<Matrix> nominal_decisions;
  for (const auto& s : strategies) {
    const auto m = matrix_from_json(decisions.at(s.name));
    if (m.rows() < n || m.cols() != n_actions) decisions.at(s.name).fail("decision matrix does not match the contexts");
    Matrix head(n, n_actions);
    for (std::size_t t = 0; t < n; ++t) std::copy_n(m.row(t).begin(), n_actions, head.row(t).begin());
    nominal_decisions.push_back(std::move(head));
  }
  for (const auto& metric : model.metrics) {
    std::vector<double> raw;
    for (const auto& d : nominal_decisions) {
      MetricInput in{d, model.outcomes, model.groups, &model.predicted, nullptr};
      raw.push_back(compute_raw_metric(metric, in));
    }
    model.anchors.push_back(anchor_of(raw));
  }

  std::vector<CompromiseRule> rules;
  std::vector<std::string> names;
  for (const auto& s : strategies) {
    if (s.kind != StrategyKind::compromise) continue;
    rules.push_back(s.rule);
    names.push_back(s.name);
  }
  if (rules.empty()) throw ConfigurationError("bundle has no compromise strategies to certify");

  if (config.coalition.empty()) throw ConfigurationError("coalition must name at least one actor");
  PerturbationSpec base;
  base.mu = config.mu;
  std::vector<std::string> coalition_names;
  for (const auto& name : config.coalition) {
    const auto i = actor_position(actors, name);
    base.coalition.push_back(i);
    coalition_names.push_back(actors[i]);
  }
  if (!(config.mu > 0.0 && config.mu < 0.5)) throw ParameterError("tube margin mu must lie in (0, 0.5)");

  const RewardTensor tensor = clip_to_tube(nominal, config.mu);
  std::size_t clipped = 0;
  for (std::size_t q = 0; q < tensor.values().size(); ++q) clipped += tensor.values()[q] != nominal.values()[q];
  const double slack = tube_slack(tensor, base);

  std::vector<double> deltas = config.deltas;
  if (config.auto_fraction) {
    if (!(slack > 0.0)) {
      throw FeasibilityError("automatic delta needs positive tube slack, but the tightest coalition entry sits on the tube boundary");
    }
    deltas = {*config.auto_fraction * slack};
  }
  if (deltas.empty()) throw ParameterError("at least one delta is required");

  std::vector<double> grid = config.tau_grid;
  if (config.tau.fixed && std::find(grid.begin(), grid.end(), *config.tau.fixed) == grid.end()) {
    grid.push_back(*config.tau.fixed);
  }

  json grid_json = json::array();
  for (std::size_t di = 0; di < deltas.size(); ++di) {
    PerturbationSpec ps = base;
    ps.delta = deltas[di];
    check_feasibility(tensor, ps);
    const auto coords = coalition_coordinates(tensor, ps);
    const bool oracle_fits = coords.size() <= kMaxBruteForceCoords;
    std::vector<RuleConstants> constants;
    json rules_json = json::array();
    for (std::size_t g = 0; g < rules.size(); ++g) {
      spdlog::debug("certifying {} at delta {}", names[g], ps.delta);
      const auto seed = derive_seed(config.seed, "certify/" + names[g] + "/" + std::to_string(di));
      auto at_star = certify_optimal(tensor, rules[g], model, ps, grid, config.samples, seed);
      std::optional<Certificate> at_fixed;
      if (config.tau.fixed) at_fixed = robust_lower_bound(tensor, rules[g], model, ps, *config.tau.fixed, at_star.constants);
      json oracle_note = nullptr;
      if (config.oracle) {
        if (oracle_fits) {
          const double worst = brute_force_worst_case(tensor, rules[g], model, ps, seed);
          at_star.oracle = worst;
          if (at_fixed) at_fixed->oracle = worst;
        } else {
          oracle_note = "coalition has " + std::to_string(coords.size()) + " coordinates; the oracle supports at most " +
                        std::to_string(kMaxBruteForceCoords);
        }
      }
      constants.push_back(at_star.constants);
      json r{{"name", names[g]},
             {"phi", to_string(rules[g].phi)},
             {"at_tau_star", to_json(at_star)},
             {"at_fixed_tau", at_fixed ? to_json(*at_fixed) : json(nullptr)}};
      if (!oracle_note.is_null()) r["oracle_skipped"] = oracle_note;
      rules_json.push_back(std::move(r));
    }
    const auto rc = check_ranking_consistency(tensor, rules, names, model, ps, constants, config.probe_samples,
                                              derive_seed(config.seed, "ranking/" + std::to_string(di)));
    json ranking = to_json(rc);
    if (rules.size() > 1 && rc.reason != "sharp scores are tied") {
      ranking["gap_arithmetic"] = "min gap " + format_double(rc.min_gap) + (rc.certified ? " > " : " <= ") +
                                  "max error sum " + format_double(rc.max_error_sum);
    }
    grid_json.push_back({{"delta", ps.delta},
                         {"coalition_coordinates", coords.size()},
                         {"rules", rules_json},
                         {"ranking", ranking}});
  }

  json perturbation = to_json(config);
  perturbation["coalition"] = coalition_names;
  perturbation["deltas"] = deltas;
  return {{"schema", "concord.certificate"},
          {"version", kCertificateVersion},
          {"bundle", {{"seed", bundle.at("seed")}, {"fold", config.fold}, {"contexts", n}, {"rows", rows}}},
          {"scenario", spec.name},
          {"weights", weight_map},
          {"perturbation", perturbation},
          {"tube", {{"mu", config.mu}, {"clipped_entries", clipped}, {"tightest_slack", slack}}},
          {"grid", grid_json}};
}

std::string format_certificate(const json& cert) {
  std::ostringstream os;
  for (const auto& point : cert.at("grid")) {
    os << "delta " << format_double(point.at("delta").get<double>()) << " ("
       << point.at("coalition_coordinates").get<std::size_t>() << " coalition coordinates)\n";
    os << pad("rule", 14) << ' ' << pad("tau", 10) << ' ' << pad("S_tau", 9) << ' ' << pad("gradient", 9) << ' '
       << pad("curvature", 9) << ' ' << pad("bias", 9) << ' ' << pad("RLB", 9) << ' ' << pad("oracle", 9) << '\n';
    for (const auto& r : point.at("rules")) {
      for (const char* key : {"at_tau_star", "at_fixed_tau"}) {
        const auto& c = r.at(key);
        if (c.is_null()) continue;
        os << pad(r.at("name").get<std::string>(), 14) << ' ' << pad(fixed(c.at("tau").get<double>(), 5), 10) << ' '
           << pad(fixed(c.at("smooth_score").get<double>()), 9) << ' '
           << pad(fixed(c.at("gradient_term").get<double>()), 9) << ' '
           << pad(fixed(c.at("curvature_term").get<double>()), 9) << ' ' << pad(fixed(c.at("bias_term").get<double>()), 9)
           << ' ' << pad(fixed(c.at("rlb").get<double>()), 9) << ' '
           << pad(c.at("oracle").is_null() ? "-" : fixed(c.at("oracle").get<double>()), 9) << '\n';
      }
    }
    const auto& rk = point.at("ranking");
    os << "ranking: " << rk.at("verdict").get<std::string>();
    if (rk.contains("gap_arithmetic")) os << " (" << rk.at("gap_arithmetic").get<std::string>() << ")";
    os << "; " << rk.at("inversions").get<std::size_t>() << " inversions in " << rk.at("probes").get<std::size_t>()
       << " probes\n";
  }
  return os.str();
}

}  // namespace concord
