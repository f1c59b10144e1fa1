#include "ksdyn/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ksdyn/error.hpp"

namespace ksdyn::csv {

std::vector<std::string> split_record(std::string_view line, char delimiter) {
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                current.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == delimiter) {
            fields.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    fields.push_back(std::move(current));
    return fields;
}

std::string escape_field(std::string_view field, char delimiter) {
    const bool needs_quotes =
        field.find_first_of("\"\r\n") != std::string_view::npos ||
        field.find(delimiter) != std::string_view::npos;
    if (!needs_quotes) return std::string(field);
    std::string out;
    out.reserve(field.size() + 2);
    out.push_back('"');
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

namespace {

// Splits file content into physical records, keeping quoted newlines
// inside one record. Returns records without line terminators.
std::vector<std::string> split_lines_quoted(const std::string& content) {
    std::vector<std::string> lines;
    std::string current;
    bool quoted = false;
    for (char c : content) {
        if (c == '"') quoted = !quoted;
        if (c == '\n' && !quoted) {
            if (!current.empty() && current.back() == '\r') current.pop_back();
            lines.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    if (!current.empty()) {
        if (current.back() == '\r') current.pop_back();
        if (!current.empty()) lines.push_back(std::move(current));
    }
    return lines;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string content = buf.str();
    // strip a UTF-8 BOM if present
    if (content.size() >= 3 && content.compare(0, 3, "\xEF\xBB\xBF") == 0) {
        content.erase(0, 3);
    }
    return content;
}

}  // namespace

std::vector<std::vector<std::string>> read_records(const std::filesystem::path& path,
                                                   char delimiter) {
    const std::string content = read_file(path);
    std::vector<std::vector<std::string>> records;
    for (const auto& line : split_lines_quoted(content)) {
        if (line.empty()) continue;
        if (line[0] == '#') continue;
        records.push_back(split_record(line, delimiter));
    }
    return records;
}

}  // namespace ksdyn::csv

namespace ksdyn {

namespace {

double parse_seconds(std::string_view text, std::size_t line_no, const char* column) {
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    while (first != last && (*first == ' ' || *first == '\t')) ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
        throw Error(ErrorCode::IoError, std::string("bad ") + column + " value '" +
                                            std::string(text) + "' at line " +
                                            std::to_string(line_no));
    }
    return value;
}

}  // namespace

void write_canonical_csv(const FeatureTable& table, const std::filesystem::path& path,
                         const std::string& comment) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
    if (!comment.empty()) out << "# " << comment << '\n';
    out << kCanonicalCsvHeader << '\n';
    char buf[128];
    for (const auto& row : table.rows) {
        out << csv::escape_field(row.subject) << ',' << csv::escape_field(row.key) << ',';
        std::snprintf(buf, sizeof(buf), "%.9f,%.9f,%.9f", row.hold, row.up_down, row.down_down);
        out << buf << '\n';
    }
    if (!out) throw Error(ErrorCode::IoError, "write failed for '" + path.string() + "'");
}

FeatureTable read_canonical_csv(const std::filesystem::path& path, DatasetTag tag) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
    probe.close();

    const auto records = csv::read_records(path);
    if (records.empty()) {
        throw Error(ErrorCode::HeaderMismatch, "empty file '" + path.string() + "'");
    }
    // header check: exact field sequence
    const std::vector<std::string> expected = {"subject", "key", "H", "UD", "DD"};
    if (records[0] != expected) {
        std::string got;
        for (std::size_t i = 0; i < records[0].size(); ++i) {
            if (i) got.push_back(',');
            got += records[0][i];
        }
        throw Error(ErrorCode::HeaderMismatch,
                    "expected header '" + std::string(kCanonicalCsvHeader) + "', got '" + got +
                        "' in '" + path.string() + "'");
    }

    FeatureTable table;
    table.source = tag;
    table.rows.reserve(records.size() - 1);
    for (std::size_t i = 1; i < records.size(); ++i) {
        const auto& rec = records[i];
        if (rec.size() != 5) {
            throw Error(ErrorCode::IoError,
                        "expected 5 fields, got " + std::to_string(rec.size()) + " at line " +
                            std::to_string(i + 1) + " of '" + path.string() + "'");
        }
        FeatureRow row;
        row.subject = rec[0];
        row.key = rec[1];
        row.hold = parse_seconds(rec[2], i + 1, "H");
        row.up_down = parse_seconds(rec[3], i + 1, "UD");
        row.down_down = parse_seconds(rec[4], i + 1, "DD");
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace ksdyn
