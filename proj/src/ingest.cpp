#include "ksdyn/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <deque>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "ksdyn/csv.hpp"
#include "ksdyn/error.hpp"

namespace ksdyn {

namespace {

constexpr std::size_t kMaxMalformedKept = 50;

bool parse_int64(std::string_view text, std::int64_t& out) {
    const char* first = text.data();
    const char* last = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

bool parse_double(std::string_view text, double& out) {
    const char* first = text.data();
    const char* last = text.data() + text.size();
    while (first != last && (*first == ' ' || *first == '\t')) ++first;
    const auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

void count_filtered(const RowValidity& verdict, ParseReport& report) {
    if (verdict.kind == RowValidity::Kind::Pause) {
        ++report.rows_filtered_pause;
    } else {
        ++report.rows_filtered_negative;
    }
}

}  // namespace

void ParseReport::note_malformed(std::size_t line_no, const std::string& message) {
    ++malformed_lines;
    if (malformed.size() < kMaxMalformedKept) malformed.emplace_back(line_no, message);
}

void ParseReport::merge(const ParseReport& other) {
    lines += other.lines;
    events += other.events;
    rows_emitted += other.rows_emitted;
    rows_filtered_negative += other.rows_filtered_negative;
    rows_filtered_pause += other.rows_filtered_pause;
    unmatched_downs += other.unmatched_downs;
    malformed_lines += other.malformed_lines;
    for (const auto& m : other.malformed) {
        if (malformed.size() >= kMaxMalformedKept) break;
        malformed.push_back(m);
    }
}

std::string ParseReport::summary() const {
    std::ostringstream out;
    out << "lines=" << lines << " events=" << events << " rows_emitted=" << rows_emitted
        << " rows_filtered_negative=" << rows_filtered_negative
        << " rows_filtered_pause=" << rows_filtered_pause
        << " unmatched_downs=" << unmatched_downs << " malformed_lines=" << malformed_lines;
    for (const auto& [line_no, message] : malformed) {
        out << "\n  line " << line_no << ": " << message;
    }
    return out.str();
}

std::vector<KeystrokeEvent> parse_buffalo_events(const std::string& raw_text,
                                                 ParseReport& report) {
    std::vector<KeystrokeEvent> events;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= raw_text.size()) {
        std::size_t end = raw_text.find('\n', pos);
        if (end == std::string::npos) end = raw_text.size();
        std::string_view line(raw_text.data() + pos, end - pos);
        pos = end + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (pos > raw_text.size() && line.empty()) break;
        ++line_no;
        if (line.empty()) continue;
        ++report.lines;

        // shape: <key> <KeyDown|KeyUp> <integer-timestamp-ms>
        const auto first_sp = line.find(' ');
        const auto second_sp = first_sp == std::string_view::npos
                                   ? std::string_view::npos
                                   : line.find(' ', first_sp + 1);
        if (second_sp == std::string_view::npos) {
            report.note_malformed(line_no, "expected 3 space-separated fields");
            continue;
        }
        const std::string_view key = line.substr(0, first_sp);
        const std::string_view action = line.substr(first_sp + 1, second_sp - first_sp - 1);
        const std::string_view stamp = line.substr(second_sp + 1);
        if (key.empty()) {
            report.note_malformed(line_no, "empty key label");
            continue;
        }
        KeystrokeEvent event;
        event.key = std::string(key);
        if (action == "KeyDown") {
            event.action = KeyAction::Down;
        } else if (action == "KeyUp") {
            event.action = KeyAction::Up;
        } else {
            report.note_malformed(line_no, "unknown action '" + std::string(action) + "'");
            continue;
        }
        std::int64_t ms = 0;
        if (!parse_int64(stamp, ms) || ms < 0) {
            report.note_malformed(line_no, "bad timestamp '" + std::string(stamp) + "'");
            continue;
        }
        event.timestamp = static_cast<double>(ms) / 1000.0;
        events.push_back(std::move(event));
        ++report.events;
    }
    if (events.empty()) {
        throw Error(ErrorCode::FileEmpty, "no valid events in input");
    }
    return events;
}

FeatureTable events_to_features(std::span<const KeystrokeEvent> events,
                                const std::string& subject, ParseReport& report,
                                const ValidationOptions& opts) {
    std::vector<KeystrokeEvent> sorted(events.begin(), events.end());
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const KeystrokeEvent& a, const KeystrokeEvent& b) {
                         return a.timestamp < b.timestamp;
                     });

    struct Press {
        std::string key;
        double down = 0.0;
        double up = 0.0;
        std::size_t down_pos = 0;
    };

    // FIFO match per key label: a KeyUp completes the oldest open press
    // of the same key.
    std::unordered_map<std::string, std::deque<Press>> open;
    std::vector<Press> completed;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const auto& event = sorted[i];
        if (event.action == KeyAction::Down) {
            open[event.key].push_back(Press{event.key, event.timestamp, 0.0, i});
        } else {
            auto it = open.find(event.key);
            if (it == open.end() || it->second.empty()) continue;  // stray KeyUp
            Press press = it->second.front();
            it->second.pop_front();
            press.up = event.timestamp;
            completed.push_back(std::move(press));
        }
    }
    for (const auto& [key, queue] : open) report.unmatched_downs += queue.size();

    // presses complete in KeyUp order; pairing follows KeyDown order
    std::stable_sort(completed.begin(), completed.end(),
                     [](const Press& a, const Press& b) { return a.down_pos < b.down_pos; });

    if (completed.size() < 2) {
        throw Error(ErrorCode::NoCompletePairs,
                    "need at least 2 completed key presses, got " +
                        std::to_string(completed.size()));
    }

    FeatureTable table;
    table.rows.reserve(completed.size() - 1);
    for (std::size_t i = 0; i + 1 < completed.size(); ++i) {
        const Press& k1 = completed[i];
        const Press& k2 = completed[i + 1];
        FeatureRow row;
        row.subject = subject;
        row.key = make_digraph_label(k1.key, k2.key);
        row.hold = k1.up - k1.down;
        row.up_down = k2.down - k1.up;
        row.down_down = k2.down - k1.down;
        const auto verdict = validate_row(row, opts);
        if (!verdict.valid) {
            count_filtered(verdict, report);
            continue;
        }
        table.rows.push_back(std::move(row));
        ++report.rows_emitted;
    }
    return table;
}

std::vector<BuffaloManifestEntry> read_buffalo_manifest(const std::filesystem::path& path) {
    const auto records = csv::read_records(path);
    if (records.empty()) throw Error(ErrorCode::FileEmpty, "empty manifest '" + path.string() + "'");
    const std::vector<std::string> expected = {"path", "subject", "session", "task",
                                               "keyboard_condition"};
    if (records[0] != expected) {
        throw Error(ErrorCode::HeaderMismatch,
                    "manifest header must be 'path,subject,session,task,keyboard_condition'");
    }
    std::vector<BuffaloManifestEntry> entries;
    for (std::size_t i = 1; i < records.size(); ++i) {
        const auto& rec = records[i];
        if (rec.size() != 5) {
            throw Error(ErrorCode::HeaderMismatch, "manifest line " + std::to_string(i + 1) +
                                                       ": expected 5 fields");
        }
        BuffaloManifestEntry entry;
        entry.path = rec[0];
        entry.subject = rec[1];
        std::int64_t value = 0;
        if (!parse_int64(rec[2], value)) {
            throw Error(ErrorCode::HeaderMismatch,
                        "manifest line " + std::to_string(i + 1) + ": bad session");
        }
        entry.session = static_cast<int>(value);
        if (!parse_int64(rec[3], value) || (value != 0 && value != 1)) {
            throw Error(ErrorCode::HeaderMismatch,
                        "manifest line " + std::to_string(i + 1) + ": task must be 0 or 1");
        }
        entry.task = static_cast<int>(value);
        entry.keyboard_condition = rec[4];
        entries.push_back(std::move(entry));
    }
    return entries;
}

FeatureTable ingest_buffalo(const std::filesystem::path& root,
                            const std::vector<BuffaloManifestEntry>& manifest,
                            const BuffaloOptions& opts, ParseReport& report) {
    std::vector<BuffaloManifestEntry> selected;
    for (const auto& entry : manifest) {
        if (opts.task && entry.task != *opts.task) continue;
        if (!opts.sessions.empty() && !opts.sessions.count(entry.session)) continue;
        if (!opts.keyboard_condition.empty() &&
            entry.keyboard_condition != opts.keyboard_condition) {
            continue;
        }
        selected.push_back(entry);
    }
    // session-major order per subject keeps each stream chronological
    std::stable_sort(selected.begin(), selected.end(),
                     [](const BuffaloManifestEntry& a, const BuffaloManifestEntry& b) {
                         if (a.subject != b.subject) return a.subject < b.subject;
                         return a.session < b.session;
                     });

    FeatureTable table;
    table.source = (opts.task && *opts.task == 1) ? DatasetTag::BuffaloFree
                                                  : DatasetTag::BuffaloFixed;
    for (const auto& entry : selected) {
        const auto file_path = root / entry.path;
        std::ifstream in(file_path, std::ios::binary);
        if (!in) throw Error(ErrorCode::IoError, "cannot open '" + file_path.string() + "'");
        std::ostringstream buf;
        buf << in.rdbuf();

        ParseReport file_report;
        try {
            const auto events = parse_buffalo_events(buf.str(), file_report);
            auto features = events_to_features(events, entry.subject, file_report,
                                               opts.validation);
            table.rows.insert(table.rows.end(),
                              std::make_move_iterator(features.rows.begin()),
                              std::make_move_iterator(features.rows.end()));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::FileEmpty && e.code() != ErrorCode::NoCompletePairs) {
                throw;
            }
            file_report.note_malformed(0, entry.path + ": " + e.what());
        }
        report.merge(file_report);
    }
    return table;
}

FeatureTable parse_aalto(const std::filesystem::path& path, ParseReport& report,
                         const ValidationOptions& opts) {
    // detect delimiter from the header line
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
    std::string header_line;
    std::getline(probe, header_line);
    probe.close();
    const char delimiter = header_line.find('\t') != std::string::npos ? '\t' : ',';

    const auto records = csv::read_records(path, delimiter);
    if (records.empty()) throw Error(ErrorCode::FileEmpty, "empty file '" + path.string() + "'");

    const auto& header = records[0];
    auto column = [&](const std::string& name) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        return std::nullopt;
    };
    auto require = [&](const std::string& name) {
        const auto idx = column(name);
        if (!idx) throw Error(ErrorCode::MissingColumn, name);
        return *idx;
    };
    const std::size_t col_participant = require("PARTICIPANT_ID");
    const std::size_t col_section = require("TEST_SECTION_ID");
    const std::size_t col_press = require("PRESS_TIME");
    const std::size_t col_release = require("RELEASE_TIME");
    const auto col_letter = column("LETTER");
    const auto col_keycode = column("KEYCODE");
    if (!col_letter && !col_keycode) throw Error(ErrorCode::MissingColumn, "LETTER");

    struct Keystroke {
        std::string key;
        double press = 0.0;
        double release = 0.0;
    };

    FeatureTable table;
    table.source = DatasetTag::Aalto;

    std::string prev_participant;
    std::string prev_section;
    bool have_prev_keystroke = false;
    Keystroke prev;

    auto field = [](const std::vector<std::string>& rec, std::size_t idx) -> const std::string& {
        static const std::string empty;
        return idx < rec.size() ? rec[idx] : empty;
    };

    for (std::size_t i = 1; i < records.size(); ++i) {
        const auto& rec = records[i];
        ++report.lines;

        const std::string& participant = field(rec, col_participant);
        const std::string& section = field(rec, col_section);
        double press_ms = 0.0;
        double release_ms = 0.0;
        if (participant.empty() || section.empty() ||
            !parse_double(field(rec, col_press), press_ms) ||
            !parse_double(field(rec, col_release), release_ms)) {
            report.note_malformed(i + 1, "unparseable record");
            have_prev_keystroke = false;  // a dropped keystroke breaks the pair chain
            continue;
        }
        std::string key;
        if (col_letter) key = field(rec, *col_letter);
        if (key.empty() && col_keycode) key = field(rec, *col_keycode);
        if (key.empty()) {
            report.note_malformed(i + 1, "no LETTER or KEYCODE value");
            have_prev_keystroke = false;
            continue;
        }
        ++report.events;

        Keystroke current{key, press_ms / 1000.0, release_ms / 1000.0};
        const bool boundary = participant != prev_participant || section != prev_section;
        if (boundary) {
            prev_participant = participant;
            prev_section = section;
            have_prev_keystroke = false;
        }
        if (have_prev_keystroke) {
            FeatureRow row;
            row.subject = participant;
            row.key = make_digraph_label(prev.key, current.key);
            row.hold = prev.release - prev.press;
            row.up_down = current.press - prev.release;
            row.down_down = current.press - prev.press;
            const auto verdict = validate_row(row, opts);
            if (verdict.valid) {
                table.rows.push_back(std::move(row));
                ++report.rows_emitted;
            } else {
                count_filtered(verdict, report);
            }
        }
        prev = std::move(current);
        have_prev_keystroke = true;
    }

    // group rows by subject, preserving chronological order inside each
    std::stable_sort(table.rows.begin(), table.rows.end(),
                     [](const FeatureRow& a, const FeatureRow& b) {
                         return a.subject < b.subject;
                     });
    return table;
}

FeatureTable parse_nanglae(const std::vector<std::filesystem::path>& paths,
                           ParseReport& report, const ValidationOptions& opts) {
    if (paths.empty()) throw Error(ErrorCode::InvalidArgument, "no input files");

    FeatureTable table;
    table.source = DatasetTag::Nanglae;
    for (const auto& path : paths) {
        const auto records = csv::read_records(path);
        if (records.empty()) {
            throw Error(ErrorCode::FileEmpty, "empty file '" + path.string() + "'");
        }
        const auto& header = records[0];
        auto column = [&](const std::string& name) -> std::size_t {
            for (std::size_t i = 0; i < header.size(); ++i) {
                std::string lower;
                for (char c : header[i]) lower.push_back(static_cast<char>(std::tolower(c)));
                std::string want;
                for (char c : name) want.push_back(static_cast<char>(std::tolower(c)));
                if (lower == want) return i;
            }
            throw Error(ErrorCode::MissingColumn, name + " in '" + path.string() + "'");
        };
        const std::size_t col_subject = column("subject");
        const std::size_t col_key = column("key");
        const std::size_t col_h = column("H");
        const std::size_t col_ud = column("UD");
        const std::size_t col_dd = column("DD");

        std::vector<FeatureRow> file_rows;
        std::vector<double> holds;
        for (std::size_t i = 1; i < records.size(); ++i) {
            const auto& rec = records[i];
            ++report.lines;
            FeatureRow row;
            if (col_subject >= rec.size() || col_key >= rec.size() || col_h >= rec.size() ||
                col_ud >= rec.size() || col_dd >= rec.size()) {
                report.note_malformed(i + 1, "short record in '" + path.string() + "'");
                continue;
            }
            row.subject = rec[col_subject];
            row.key = rec[col_key];
            if (!parse_double(rec[col_h], row.hold) || !parse_double(rec[col_ud], row.up_down) ||
                !parse_double(rec[col_dd], row.down_down)) {
                report.note_malformed(i + 1, "bad timing value in '" + path.string() + "'");
                continue;
            }
            holds.push_back(row.hold);
            const auto verdict = validate_row(row, opts);
            if (verdict.valid) {
                file_rows.push_back(std::move(row));
                ++report.rows_emitted;
            } else {
                count_filtered(verdict, report);
            }
        }

        // median hold above 5 seconds means the file is still in milliseconds
        if (!holds.empty()) {
            auto mid = holds.begin() + static_cast<std::ptrdiff_t>(holds.size() / 2);
            std::nth_element(holds.begin(), mid, holds.end());
            double median = *mid;
            if (holds.size() % 2 == 0) {
                const double upper = median;
                auto lower_it = std::max_element(holds.begin(), mid);
                median = (*lower_it + upper) / 2.0;
            }
            if (median > 5.0) {
                std::ostringstream msg;
                msg << "median H = " << median << " in '" << path.string()
                    << "'; timings look like milliseconds, convert them to seconds first";
                throw Error(ErrorCode::UnitSuspicion, msg.str());
            }
        }
        table.rows.insert(table.rows.end(), std::make_move_iterator(file_rows.begin()),
                          std::make_move_iterator(file_rows.end()));
    }

    std::stable_sort(table.rows.begin(), table.rows.end(),
                     [](const FeatureRow& a, const FeatureRow& b) {
                         return a.subject < b.subject;
                     });
    return table;
}

}  // namespace ksdyn
