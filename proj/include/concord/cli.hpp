#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "concord/error.hpp"
#include "concord/evaluation.hpp"
#include "concord/json_util.hpp"
#include "concord/robustness.hpp"
#include "concord/scenarios.hpp"

namespace concord {

inline constexpr int kRunConfigVersion = 1;
inline constexpr int kBundleVersion = 1;
inline constexpr int kModelStoreVersion = 1;
inline constexpr int kCertificateVersion = 1;

enum ExitCode : int { kExitOk = 0, kExitValidation = 2, kExitInfeasible = 3, kExitIo = 4 };

int exit_code(ErrorKind kind) noexcept;

/// Throws ValidationError with a migration hint when `doc` is not a `schema` document of `version`.
void check_version(const json& doc, std::string_view schema, int version);

struct RunConfig {
  ScenarioSpec scenario;
  /// CSV written by `generate`; the scenario is generated in memory when absent.
  std::optional<std::filesystem::path> data;
  /// Catalogue names or shorthand; empty selects the scenario catalogue.
  std::vector<std::string> strategies;
  /// By metric name; empty selects the default weights.
  std::map<std::string, double> weights;
  CvConfig cv;
  std::filesystem::path out = "concord-out";
};

/// Relative data paths resolve against `base_dir`.
RunConfig run_config_from_json(const json& doc, const std::filesystem::path& base_dir = {});
json to_json(const RunConfig& config);

/// Fixed temperature, or nullopt for the optimal one.
struct TauPolicy {
  std::optional<double> fixed;
};
/// "optimal" or "fixed:<v>".
TauPolicy parse_tau_policy(const std::string& text);
std::string to_string(const TauPolicy& policy);

struct CertifyConfig {
  std::vector<std::string> coalition;
  std::vector<double> deltas{0.01};
  /// Set when delta is "auto": this fraction of the tightest tube slack.
  std::optional<double> auto_fraction;
  double mu = 0.05;
  TauPolicy tau;
  bool oracle = false;
  std::size_t samples = 200;
  std::size_t probe_samples = 1000;
  std::vector<double> tau_grid = default_tau_grid();
  std::size_t fold = 0;
  /// Leading validation contexts of the fold to certify; 0 keeps all.
  std::size_t max_contexts = 4;
  std::uint64_t seed = 0;
  std::map<std::string, double> weights;
};

/// Accepts the perturbation object itself or a document with a "perturbation" member.
CertifyConfig certify_config_from_json(const json& doc);
json to_json(const CertifyConfig& config);
/// "0.01,0.05", "auto" or "auto:<fraction>".
void parse_delta_option(const std::string& text, CertifyConfig& config);

/// "Metric=0.5,Other=0.5", or the path of a JSON file holding a weight object (optionally under "weights").
std::map<std::string, double> parse_weights_option(const std::string& text);

std::vector<Strategy> resolve_strategies(std::span<const std::string> names, const ScenarioSpec& spec);
std::vector<double> resolve_weights(const std::map<std::string, double>& weights, std::span<const Metric> metrics);

struct GenerateResult {
  std::filesystem::path csv;
  std::filesystem::path truth;
  std::size_t rows = 0;
};

/// Writes the scenario CSV plus a `<stem>.truth.json` sidecar next to it.
GenerateResult cmd_generate(const ScenarioSpec& spec, const std::filesystem::path& csv);

struct SelectOutput {
  SelectionResult selection;
  json bundle;
  json store;
  json summary;
  std::string table;
};

/// Runs cross-validated selection and fits the deployable models on all rows. No writes.
SelectOutput run_selection(const RunConfig& config);
/// run_selection, then writes bundle.json, model_store.json and selection.json under config.out.
SelectOutput cmd_select(const RunConfig& config);

/// One recommendation record for a context {"features": {...} | [...], "group": g}.
json recommend(const json& store, const json& context, std::size_t index = 0);
/// Contexts as one JSON object, a JSON array, or JSON lines. One record per context, in order.
std::vector<json> cmd_recommend(const json& store, std::istream& contexts);

json cmd_certify(const json& bundle, const CertifyConfig& config);
std::string format_certificate(const json& certificate);

}  // namespace concord
