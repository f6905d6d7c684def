#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "concord/cli.hpp"

namespace {

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("concord");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("CONCORD_LOG")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }
}

bool parse_on_off(const std::string& v) {
  if (v == "on") return true;
  if (v == "off") return false;
  throw concord::ParameterError("--oracle expects 'on' or 'off', got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(',', start);
    auto item = text.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
    if (!item.empty()) out.push_back(item);
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace concord;
  namespace fs = std::filesystem;
  setup_logging();

  CLI::App app{"concord: multi-stakeholder decision selection and robustness certification"};
  app.require_subcommand(1);

  std::string config_path, out_path, strategies, weights, tau, delta, coalition, oracle, bundle_path, store_path,
      context_path;
  std::uint64_t seed = 0;
  std::size_t folds = 0, fold = 0, max_contexts = 0, samples = 0;
  double mu = 0.0;

  auto* gen = app.add_subcommand("generate", "Write a synthetic scenario CSV and its ground-truth sidecar");
  gen->add_option("--config", config_path, "Scenario spec JSON")->required();
  gen->add_option("--out", out_path, "Output CSV path")->required();
  gen->add_option("--seed", seed, "Override the scenario seed");

  auto* sel = app.add_subcommand("select", "Cross-validate strategies and export the evaluation bundle");
  sel->add_option("--config", config_path, "Run configuration JSON")->required();
  sel->add_option("--out", out_path, "Output directory");
  sel->add_option("--seed", seed, "Run seed");
  sel->add_option("--strategies", strategies, "Comma-separated strategy names or shorthand");
  sel->add_option("--weights", weights, "Metric=weight list, or a weights JSON file");
  sel->add_option("--folds", folds, "Number of folds");

  auto* rec = app.add_subcommand("recommend", "Recommend actions for new contexts from a model store");
  rec->add_option("--store", store_path, "Model store JSON written by select")->required();
  rec->add_option("--context", context_path, "Context JSON, JSON array or JSON lines ('-' for stdin)")->required();
  rec->add_option("--out", out_path, "Output JSON lines file (default stdout)");

  auto* cert = app.add_subcommand("certify", "Certify compromise rules against coalition perturbations");
  cert->add_option("--bundle", bundle_path, "Evaluation bundle JSON")->required();
  cert->add_option("--config", config_path, "Perturbation spec JSON");
  cert->add_option("--out", out_path, "Certificate JSON path (default stdout)");
  cert->add_option("--seed", seed, "Estimator seed");
  cert->add_option("--tau", tau, "optimal | fixed:<value>");
  cert->add_option("--delta", delta, "Comma-separated radii, or auto[:fraction]");
  cert->add_option("--coalition", coalition, "Comma-separated actor names");
  cert->add_option("--mu", mu, "Tube margin");
  cert->add_option("--oracle", oracle, "on | off");
  cert->add_option("--weights", weights, "Metric=weight list, or a weights JSON file");
  cert->add_option("--fold", fold, "Bundle fold to certify");
  cert->add_option("--max-contexts", max_contexts, "Leading contexts of the fold (0 keeps all)");
  cert->add_option("--samples", samples, "Ball samples for constant estimation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*gen) {
      auto spec = scenario_spec_from_json(read_json_file(config_path));
      if (gen->count("--seed")) spec.seed = seed;
      const auto r = cmd_generate(spec, out_path);
      std::cout << "wrote " << r.rows << " rows to " << r.csv.string() << " and ground truth to " << r.truth.string()
                << '\n';
    } else if (*sel) {
      const fs::path cfg = config_path;
      auto rc = run_config_from_json(read_json_file(cfg), cfg.parent_path());
      if (sel->count("--out")) rc.out = out_path;
      if (sel->count("--seed")) rc.cv.seed = seed;
      if (sel->count("--strategies")) rc.strategies = split_list(strategies);
      if (sel->count("--weights")) rc.weights = parse_weights_option(weights);
      if (sel->count("--folds")) rc.cv.folds = folds;
      const auto out = cmd_select(rc);
      std::cout << out.table;
    } else if (*rec) {
      const auto store = read_json_file(store_path);
      std::vector<json> records;
      if (context_path == "-") {
        records = cmd_recommend(store, std::cin);
      } else {
        std::ifstream in(context_path);
        if (!in) throw IoError("cannot open '" + context_path + "' for reading");
        records = cmd_recommend(store, in);
      }
      std::ofstream file;
      if (!out_path.empty()) {
        file.open(out_path, std::ios::binary);
        if (!file) throw IoError("cannot open '" + out_path + "' for writing");
      }
      std::ostream& os = out_path.empty() ? std::cout : file;
      for (const auto& r : records) os << r.dump() << '\n';
      if (!os) throw IoError("write failed for recommendations");
    } else if (*cert) {
      const auto bundle = read_json_file(bundle_path);
      CertifyConfig cc;
      if (!config_path.empty()) cc = certify_config_from_json(read_json_file(config_path));
      if (cert->count("--seed")) cc.seed = seed;
      if (cert->count("--tau")) cc.tau = parse_tau_policy(tau);
      if (cert->count("--delta")) parse_delta_option(delta, cc);
      if (cert->count("--coalition")) cc.coalition = split_list(coalition);
      if (cert->count("--mu")) cc.mu = mu;
      if (cert->count("--oracle")) cc.oracle = parse_on_off(oracle);
      if (cert->count("--weights")) cc.weights = parse_weights_option(weights);
      if (cert->count("--fold")) cc.fold = fold;
      if (cert->count("--max-contexts")) cc.max_contexts = max_contexts;
      if (cert->count("--samples")) cc.samples = samples;
      const auto doc = cmd_certify(bundle, cc);
      if (out_path.empty()) {
        std::cout << doc.dump(2) << '\n';
      } else {
        write_json_file(out_path, doc);
        std::cout << format_certificate(doc);
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitOk;
}
