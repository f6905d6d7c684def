#include "concord/csv_io.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "concord/error.hpp"
#include "concord/json_util.hpp"

namespace concord {

namespace {

constexpr std::string_view kRewardPrefix = "reward_";

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cell);
      cell.clear();
    } else if (c != '\r') {
      cell += c;
    }
  }
  cells.push_back(cell);
  for (auto& s : cells) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }
  return cells;
}

std::string cell_error(const std::string& source, std::size_t line, const std::string& column, const std::string& msg) {
  return source + ": line " + std::to_string(line) + " (row " + std::to_string(line - 1) + "), column '" + column +
         "': " + msg;
}

// Accepts either a positional index or a label.
std::size_t parse_label_or_index(const std::string& cell, const std::vector<std::string>& labels, bool& ok) {
  ok = true;
  if (auto v = parse_double(cell); v && *v >= 0 && std::floor(*v) == *v && *v < static_cast<double>(labels.size())) {
    return static_cast<std::size_t>(*v);
  }
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] == cell) return k;
  }
  ok = false;
  return 0;
}

void write_header(std::ostream& out, const Schema& schema, const std::vector<std::string>& actors) {
  bool first = true;
  auto put = [&](const std::string& s) {
    if (!first) out << ',';
    out << s;
    first = false;
  };
  for (const auto& f : schema.feature_names) put(f);
  if (schema.has_group()) put(schema.group_column);
  put("action");
  put("outcome");
  for (const auto& a : actors) put(std::string(kRewardPrefix) + a);
  out << '\n';
}

void write_row(std::ostream& out, const Schema& schema, const Observation& row, const std::vector<double>* rewards) {
  for (std::size_t j = 0; j < row.context.features.size(); ++j) {
    if (j > 0) out << ',';
    out << format_double(row.context.features[j]);
  }
  const char* sep = row.context.features.empty() ? "" : ",";
  if (schema.has_group()) {
    out << sep << *row.context.group;
    sep = ",";
  }
  out << sep << row.action << ',' << format_double(row.outcome);
  if (rewards) {
    for (double r : *rewards) out << ',' << format_double(r);
  }
  out << '\n';
}

}  // namespace

IngestResult ingest_csv(const std::filesystem::path& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return ingest_csv(in, schema, path.string());
}

IngestResult ingest_csv(std::istream& in, const Schema& schema, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(source + ": missing header row");
  const auto header = split_line(line);

  std::map<std::string, std::size_t> column;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (!column.emplace(header[c], c).second) throw ValidationError(source + ": duplicate column '" + header[c] + "'");
  }
  auto require = [&](const std::string& name) {
    auto it = column.find(name);
    if (it == column.end()) throw ValidationError(source + ": missing column '" + name + "'");
    return it->second;
  };

  std::vector<std::size_t> feature_cols;
  for (const auto& f : schema.feature_names) feature_cols.push_back(require(f));
  const std::size_t action_col = require("action");
  const std::size_t outcome_col = require("outcome");
  std::optional<std::size_t> group_col;
  if (schema.has_group()) group_col = require(schema.group_column);

  std::vector<std::string> actors = schema.actors;
  for (const auto& name : header) {
    if (name.rfind(kRewardPrefix, 0) == 0) {
      const auto actor = name.substr(kRewardPrefix.size());
      if (std::find(actors.begin(), actors.end(), actor) == actors.end()) actors.push_back(actor);
    }
  }
  std::vector<std::size_t> reward_cols;
  for (const auto& a : actors) reward_cols.push_back(require(std::string(kRewardPrefix) + a));

  const std::size_t known = feature_cols.size() + 2 + (group_col ? 1 : 0) + reward_cols.size();
  if (known != header.size()) {
    for (const auto& name : header) {
      const bool is_known = std::find(schema.feature_names.begin(), schema.feature_names.end(), name) !=
                                schema.feature_names.end() ||
                            name == "action" || name == "outcome" || (group_col && name == schema.group_column) ||
                            name.rfind(kRewardPrefix, 0) == 0;
      if (!is_known) throw ValidationError(source + ": unexpected column '" + name + "'");
    }
  }

  std::vector<Observation> rows;
  std::vector<std::vector<double>> rewards;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size()) {
      throw ValidationError(source + ": line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                            " cells, expected " + std::to_string(header.size()));
    }
    auto number = [&](std::size_t c) {
      auto v = parse_double(cells[c]);
      if (!v) throw ValidationError(cell_error(source, line_no, header[c], "unparsable value '" + cells[c] + "'"));
      return *v;
    };

    Observation obs;
    for (auto c : feature_cols) obs.context.features.push_back(number(c));
    if (group_col) {
      const double g = number(*group_col);
      if (std::floor(g) != g) throw ValidationError(cell_error(source, line_no, header[*group_col], "group must be an integer code"));
      obs.context.group = static_cast<int>(g);
    }
    bool ok = true;
    obs.action = parse_label_or_index(cells[action_col], schema.actions.labels(), ok);
    if (!ok) throw ValidationError(cell_error(source, line_no, "action", "action '" + cells[action_col] + "' out of range"));
    if (schema.outcomes.is_discrete()) {
      obs.outcome = static_cast<double>(parse_label_or_index(cells[outcome_col], schema.outcomes.labels(), ok));
      if (!ok) {
        throw ValidationError(cell_error(source, line_no, "outcome", "outcome '" + cells[outcome_col] + "' out of range"));
      }
    } else {
      obs.outcome = number(outcome_col);
    }
    std::vector<double> r;
    for (auto c : reward_cols) {
      const double v = number(c);
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ValidationError(cell_error(source, line_no, header[c], "reward " + cells[c] + " outside [0,1]"));
      }
      r.push_back(v);
    }
    rows.push_back(std::move(obs));
    rewards.push_back(std::move(r));
  }

  Schema resolved = schema;
  resolved.actors = actors;
  Dataset data(std::move(resolved), std::move(rows));
  if (actors.empty()) return data;
  return AugmentedDataset(std::move(data), StakeholderSet(actors), std::move(rewards));
}

void write_csv(std::ostream& out, const Dataset& data) {
  write_header(out, data.schema(), {});
  for (const auto& row : data.rows()) write_row(out, data.schema(), row, nullptr);
}

void write_csv(std::ostream& out, const AugmentedDataset& data) {
  const auto& schema = data.base().schema();
  write_header(out, schema, data.actors().labels());
  for (std::size_t t = 0; t < data.size(); ++t) write_row(out, schema, data.base().row(t), &data.rewards()[t]);
}

void write_csv(const std::filesystem::path& path, const AugmentedDataset& data) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_csv(out, data);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace concord
