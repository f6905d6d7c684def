#pragma once

#include <filesystem>
#include <iosfwd>
#include <variant>

#include "concord/core_model.hpp"

namespace concord {

using IngestResult = std::variant<Dataset, AugmentedDataset>;

/// Reads a header-led CSV with the schema's feature columns, `action`, `outcome`, the
/// optional group column and optional `reward_<actor>` columns. Reward columns not listed
/// in the schema are picked up from the header. Returns an AugmentedDataset whenever
/// reward columns are present.
IngestResult ingest_csv(const std::filesystem::path& path, const Schema& schema);
IngestResult ingest_csv(std::istream& in, const Schema& schema, const std::string& source = "<stream>");

void write_csv(std::ostream& out, const Dataset& data);
void write_csv(std::ostream& out, const AugmentedDataset& data);
void write_csv(const std::filesystem::path& path, const AugmentedDataset& data);

}  // namespace concord
