#include "ksdyn/store.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "ksdyn/error.hpp"
#include "ksdyn/util.hpp"

namespace ksdyn {

namespace {

constexpr const char* kMagic = "KSDYN1";

std::string magic_line(const std::string& detector) {
    return std::string(kMagic) + " " + detector + "\n";
}

double parse_float(const std::string& token, const char* what) {
    char* end = nullptr;
    const double value = std::strtod(token.c_str(), &end);
    if (end != token.c_str() + token.size() || token.empty())
        throw Error(ErrorCode::HeaderMismatch,
                    std::string("bad float in ") + what + ": " + token);
    return value;
}

std::uint64_t parse_uint(const std::string& token, const char* what) {
    char* end = nullptr;
    const unsigned long long value = std::strtoull(token.c_str(), &end, 10);
    if (end != token.c_str() + token.size() || token.empty())
        throw Error(ErrorCode::HeaderMismatch,
                    std::string("bad integer in ") + what + ": " + token);
    return value;
}

std::vector<std::string> tokenize(const std::string& line) {
    std::istringstream in(line);
    std::vector<std::string> tokens;
    std::string token;
    while (in >> token) tokens.push_back(token);
    return tokens;
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string current;
    for (char c : text) {
        if (c == '\n') {
            lines.push_back(current);
            current.clear();
        } else if (c != '\r') {
            current += c;
        }
    }
    if (!current.empty()) lines.push_back(current);
    return lines;
}

bool is_comment(const std::string& line) {
    return !line.empty() && line[0] == '#';
}

std::string with_comment(std::string text, const std::string& comment) {
    if (comment.empty()) return text;
    text.insert(text.find('\n') + 1, "# " + comment + "\n");
    return text;
}

void expect_magic(const std::vector<std::string>& lines,
                  const std::string& detector) {
    if (lines.empty() || lines[0] != std::string(kMagic) + " " + detector)
        throw Error(ErrorCode::HeaderMismatch,
                    "expected '" + std::string(kMagic) + " " + detector +
                        "' header");
}

void append_params(std::string& out, const GmmParams& params) {
    out += params.fell_back_to_single ? " 1 " : " 0 ";
    out += std::to_string(params.components());
    for (double w : params.weights) out += " " + format_double(w);
    for (double m : params.means) out += " " + format_double(m);
    for (double v : params.variances) out += " " + format_double(v);
}

GmmParams params_from_tokens(const std::vector<std::string>& tokens,
                             std::size_t offset) {
    GmmParams params;
    if (tokens.size() < offset + 2)
        throw Error(ErrorCode::HeaderMismatch, "truncated mixture record");
    params.fell_back_to_single =
        parse_uint(tokens[offset], "fallback flag") != 0;
    const auto m = static_cast<std::size_t>(
        parse_uint(tokens[offset + 1], "component count"));
    if (tokens.size() != offset + 2 + 3 * m)
        throw Error(ErrorCode::HeaderMismatch, "truncated mixture record");
    for (std::size_t i = 0; i < m; ++i)
        params.weights.push_back(
            parse_float(tokens[offset + 2 + i], "weight"));
    for (std::size_t i = 0; i < m; ++i)
        params.means.push_back(
            parse_float(tokens[offset + 2 + m + i], "mean"));
    for (std::size_t i = 0; i < m; ++i)
        params.variances.push_back(
            parse_float(tokens[offset + 2 + 2 * m + i], "variance"));
    return params;
}

}  // namespace

std::string serialize_profile(const MahalanobisModel& model) {
    std::string out = magic_line("mahalanobis");
    out += "subject " + percent_escape(model.subject) + "\n";
    out += "n_train " + std::to_string(model.n_train) + "\n";
    out += std::string("degenerate ") + (model.degenerate ? "1" : "0") + "\n";
    out += "mean";
    for (int i = 0; i < 3; ++i) out += " " + format_double(model.mean(i));
    out += "\ns_pinv";
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            out += " " + format_double(model.s_pinv(r, c));
    out += "\n";
    return out;
}

MahalanobisModel parse_mahalanobis_profile(const std::string& text) {
    const auto lines = split_lines(text);
    expect_magic(lines, "mahalanobis");
    MahalanobisModel model;
    bool have_mean = false, have_pinv = false;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (is_comment(lines[i])) continue;
        const auto tokens = tokenize(lines[i]);
        if (tokens.empty()) continue;
        if (tokens[0] == "subject" && tokens.size() == 2) {
            model.subject = percent_unescape(tokens[1]);
        } else if (tokens[0] == "n_train" && tokens.size() == 2) {
            model.n_train =
                static_cast<std::size_t>(parse_uint(tokens[1], "n_train"));
        } else if (tokens[0] == "degenerate" && tokens.size() == 2) {
            model.degenerate = parse_uint(tokens[1], "degenerate") != 0;
        } else if (tokens[0] == "mean" && tokens.size() == 4) {
            for (int j = 0; j < 3; ++j)
                model.mean(j) = parse_float(tokens[1 + j], "mean");
            have_mean = true;
        } else if (tokens[0] == "s_pinv" && tokens.size() == 10) {
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c)
                    model.s_pinv(r, c) =
                        parse_float(tokens[1 + r * 3 + c], "s_pinv");
            have_pinv = true;
        } else {
            throw Error(ErrorCode::HeaderMismatch,
                        "bad record line: " + lines[i]);
        }
    }
    if (model.subject.empty() || !have_mean || !have_pinv ||
        model.n_train < 2)
        throw Error(ErrorCode::HeaderMismatch, "incomplete record");
    return model;
}

std::string serialize_profile(const GmmUserModel& model) {
    std::string out = magic_line("gmm");
    out += "subject " + percent_escape(model.subject) + "\n";
    out += "n_train " + std::to_string(model.n_train) + "\n";
    out += "calibration " + format_double(model.calibration_center) + " " +
           format_double(model.calibration_scale) + "\n";
    out += "background";
    append_params(out, model.background);
    out += "\n";
    for (const auto& [digraph, params] : model.per_digraph) {
        out += "digraph " + percent_escape(digraph);
        append_params(out, params);
        out += "\n";
    }
    return out;
}

GmmUserModel parse_gmm_profile(const std::string& text) {
    const auto lines = split_lines(text);
    expect_magic(lines, "gmm");
    GmmUserModel model;
    bool have_background = false, have_calibration = false;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (is_comment(lines[i])) continue;
        const auto tokens = tokenize(lines[i]);
        if (tokens.empty()) continue;
        if (tokens[0] == "subject" && tokens.size() == 2) {
            model.subject = percent_unescape(tokens[1]);
        } else if (tokens[0] == "n_train" && tokens.size() == 2) {
            model.n_train =
                static_cast<std::size_t>(parse_uint(tokens[1], "n_train"));
        } else if (tokens[0] == "calibration" && tokens.size() == 3) {
            model.calibration_center = parse_float(tokens[1], "calibration");
            model.calibration_scale = parse_float(tokens[2], "calibration");
            have_calibration = true;
        } else if (tokens[0] == "background") {
            model.background = params_from_tokens(tokens, 1);
            have_background = true;
        } else if (tokens[0] == "digraph" && tokens.size() >= 4) {
            model.per_digraph.emplace(percent_unescape(tokens[1]),
                                      params_from_tokens(tokens, 2));
        } else {
            throw Error(ErrorCode::HeaderMismatch,
                        "bad record line: " + lines[i]);
        }
    }
    if (model.subject.empty() || !have_background || !have_calibration ||
        model.per_digraph.empty())
        throw Error(ErrorCode::HeaderMismatch, "incomplete record");
    return model;
}

std::string serialize_profile(const GpProfile& profile,
                              const KeyRankIndex& index) {
    std::string out = magic_line("gp");
    out += "subject " + percent_escape(profile.subject) + "\n";
    for (const auto& [measure, value] : profile.mean_self_distance)
        out += "self " + measure + " " + format_double(value) + "\n";
    for (std::size_t s = 0; s < profile.samples.size(); ++s) {
        const auto& sample = profile.samples[s];
        out += "sample " + std::to_string(s) + " " +
               std::to_string(sample.source_rows) + "\n";
        for (int n = 2; n <= 4; ++n) {
            for (const auto& [packed, stat] : sample.table(n).entries) {
                out += "ngraph " + std::to_string(n);
                for (int k = 0; k < n; ++k) {
                    const auto rank = static_cast<std::uint16_t>(
                        (packed >> (16 * (3 - k))) & 0xFFFF);
                    out += " " + percent_escape(index.label_of(rank));
                }
                out += " " + format_double(stat.mean_duration) + " " +
                       std::to_string(stat.count) + "\n";
            }
        }
    }
    return out;
}

GpProfile parse_gp_profile(const std::string& text, KeyRankIndex& index) {
    const auto lines = split_lines(text);
    expect_magic(lines, "gp");
    GpProfile profile;
    struct RawEntry {
        int n;
        std::uint64_t packed;
        NGraphStat stat;
    };
    std::vector<std::vector<RawEntry>> raw;
    std::vector<std::size_t> source_rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (is_comment(lines[i])) continue;
        const auto tokens = tokenize(lines[i]);
        if (tokens.empty()) continue;
        if (tokens[0] == "subject" && tokens.size() == 2) {
            profile.subject = percent_unescape(tokens[1]);
        } else if (tokens[0] == "self" && tokens.size() == 3) {
            profile.mean_self_distance[tokens[1]] =
                parse_float(tokens[2], "self distance");
        } else if (tokens[0] == "sample" && tokens.size() == 3) {
            raw.emplace_back();
            source_rows.push_back(static_cast<std::size_t>(
                parse_uint(tokens[2], "source rows")));
        } else if (tokens[0] == "ngraph" && tokens.size() >= 5) {
            if (raw.empty())
                throw Error(ErrorCode::HeaderMismatch,
                            "ngraph before any sample line");
            const auto n = static_cast<int>(parse_uint(tokens[1], "order"));
            if (n < 2 || n > 4 ||
                tokens.size() != static_cast<std::size_t>(n) + 4)
                throw Error(ErrorCode::HeaderMismatch,
                            "bad ngraph line: " + lines[i]);
            std::vector<std::uint16_t> ranks;
            for (int k = 0; k < n; ++k)
                ranks.push_back(
                    index.rank_of(percent_unescape(tokens[2 + k])));
            NGraphStat stat;
            stat.mean_duration =
                parse_float(tokens[2 + n], "mean duration");
            stat.count = static_cast<std::uint32_t>(
                parse_uint(tokens[3 + n], "count"));
            raw.back().push_back({n, pack_tuple(ranks), stat});
        } else {
            throw Error(ErrorCode::HeaderMismatch,
                        "bad record line: " + lines[i]);
        }
    }
    if (profile.subject.empty())
        throw Error(ErrorCode::HeaderMismatch, "incomplete record");
    for (std::size_t s = 0; s < raw.size(); ++s) {
        GpSampleTables tables;
        tables.source_rows = source_rows[s];
        tables.t2.n = 2;
        tables.t3.n = 3;
        tables.t4.n = 4;
        for (const auto& entry : raw[s]) {
            auto& table = entry.n == 2   ? tables.t2
                          : entry.n == 3 ? tables.t3
                                         : tables.t4;
            table.entries.emplace_back(entry.packed, entry.stat);
        }
        for (auto* table : {&tables.t2, &tables.t3, &tables.t4})
            std::sort(table->entries.begin(), table->entries.end(),
                      [](const auto& a, const auto& b) {
                          return a.first < b.first;
                      });
        profile.samples.push_back(std::move(tables));
    }
    return profile;
}

namespace {

std::filesystem::path record_path(const std::filesystem::path& dir,
                                  const std::string& detector,
                                  const std::string& subject) {
    return dir / (detector + "_" + percent_escape(subject) + ".profile");
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << text;
    if (!out)
        throw Error(ErrorCode::IoError, "short write: " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::vector<std::filesystem::path> profile_files(
    const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        throw Error(ErrorCode::IoError,
                    "profile store is not a directory: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() &&
            entry.path().extension() == ".profile")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    return files;
}

bool has_magic(const std::string& text, const std::string& detector) {
    const std::string want = std::string(kMagic) + " " + detector + "\n";
    return text.rfind(want, 0) == 0;
}

}  // namespace

void save_store(const std::filesystem::path& dir,
                const MahalanobisDetector& detector,
                const std::string& comment) {
    std::filesystem::create_directories(dir);
    for (const auto& [subject, model] : detector.models())
        write_file(record_path(dir, "mahalanobis", subject),
                   with_comment(serialize_profile(model), comment));
}

void save_store(const std::filesystem::path& dir, const GmmDetector& detector,
                const std::string& comment) {
    std::filesystem::create_directories(dir);
    for (const auto& [subject, model] : detector.models())
        write_file(record_path(dir, "gmm", subject),
                   with_comment(serialize_profile(model), comment));
}

void save_store(const std::filesystem::path& dir, const GpDetector& detector,
                const std::string& comment) {
    std::filesystem::create_directories(dir);
    for (const auto& profile : detector.gallery())
        write_file(record_path(dir, "gp", profile.subject),
                   with_comment(serialize_profile(profile, detector.index()),
                                comment));
}

void load_store(const std::filesystem::path& dir,
                MahalanobisDetector& detector) {
    for (const auto& path : profile_files(dir)) {
        const auto text = read_file(path);
        if (!has_magic(text, "mahalanobis")) continue;
        auto model = parse_mahalanobis_profile(text);
        detector.models()[model.subject] = std::move(model);
    }
}

void load_store(const std::filesystem::path& dir, GmmDetector& detector) {
    for (const auto& path : profile_files(dir)) {
        const auto text = read_file(path);
        if (!has_magic(text, "gmm")) continue;
        auto model = parse_gmm_profile(text);
        detector.models()[model.subject] = std::move(model);
    }
}

void load_store(const std::filesystem::path& dir, GpDetector& detector) {
    // Two passes: ranks must be assigned from the sorted label set so that
    // packed order matches lexicographic tuple order.
    std::vector<std::pair<std::filesystem::path, std::string>> records;
    std::set<std::string> labels;
    for (const auto& path : profile_files(dir)) {
        auto text = read_file(path);
        if (!has_magic(text, "gp")) continue;
        for (const auto& line : split_lines(text)) {
            const auto tokens = tokenize(line);
            if (tokens.size() >= 5 && tokens[0] == "ngraph") {
                const auto n =
                    static_cast<std::size_t>(parse_uint(tokens[1], "order"));
                for (std::size_t k = 0;
                     k < n && 2 + k < tokens.size() - 2; ++k)
                    labels.insert(percent_unescape(tokens[2 + k]));
            }
        }
        records.emplace_back(path, std::move(text));
    }
    KeyRankIndex index({labels.begin(), labels.end()});
    std::vector<GpProfile> gallery;
    for (const auto& [path, text] : records)
        gallery.push_back(parse_gp_profile(text, index));
    detector.adopt(std::move(gallery), std::move(index));
}

}  // namespace ksdyn
