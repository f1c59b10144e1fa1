#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ksdyn/types.hpp"

namespace ksdyn::csv {

/// Splits one CSV record. Fields containing the delimiter, quotes or
/// newlines must be double-quoted; "" inside quotes is a literal quote.
std::vector<std::string> split_record(std::string_view line, char delimiter = ',');

/// Quotes a field iff it needs quoting.
std::string escape_field(std::string_view field, char delimiter = ',');

/// Reads all records of a delimited file, honoring quoted newlines.
/// Lines starting with '#' outside quotes are skipped as comments.
std::vector<std::vector<std::string>> read_records(const std::filesystem::path& path,
                                                   char delimiter = ',');

}  // namespace ksdyn::csv

namespace ksdyn {

inline constexpr const char* kCanonicalCsvHeader = "subject,key,H,UD,DD";

/// Writes the canonical feature CSV: exact header, times as decimal
/// seconds with nine fractional digits, rows in table order. A non-empty
/// `comment` becomes a leading `# ...` line, skipped on read.
void write_canonical_csv(const FeatureTable& table, const std::filesystem::path& path,
                         const std::string& comment = {});

/// Reads a canonical feature CSV back. The header must match exactly;
/// '#'-prefixed lines are ignored.
FeatureTable read_canonical_csv(const std::filesystem::path& path,
                                DatasetTag tag = DatasetTag::Synthetic);

}  // namespace ksdyn
