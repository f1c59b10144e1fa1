#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ksdyn/types.hpp"

namespace ksdyn {

struct ParseReport {
    std::size_t lines = 0;
    std::size_t events = 0;
    std::size_t rows_emitted = 0;
    std::size_t rows_filtered_negative = 0;
    std::size_t rows_filtered_pause = 0;
    std::size_t unmatched_downs = 0;
    std::size_t malformed_lines = 0;
    std::vector<std::pair<std::size_t, std::string>> malformed;  // (line_no, message), capped

    void note_malformed(std::size_t line_no, const std::string& message);
    void merge(const ParseReport& other);
    std::string summary() const;
};

/// Parses Buffalo raw event logs: one event per line,
/// `<key> <KeyDown|KeyUp> <integer-timestamp-ms>`. Timestamps become
/// seconds. Unparseable lines are rejected and counted, not fatal.
/// Throws FileEmpty when no valid event was found.
std::vector<KeystrokeEvent> parse_buffalo_events(const std::string& raw_text,
                                                 ParseReport& report);

/// Pairs Down/Up events per key label (first-in-first-out), then emits one
/// FeatureRow per consecutive pair of completed presses. Rows failing
/// validate_row are dropped and counted; unmatched downs are discarded.
/// Throws NoCompletePairs when fewer than two presses complete.
FeatureTable events_to_features(std::span<const KeystrokeEvent> events,
                                const std::string& subject, ParseReport& report,
                                const ValidationOptions& opts = {});

struct BuffaloManifestEntry {
    std::string path;  // relative to the dataset root
    std::string subject;
    int session = 0;
    int task = 0;  // 0 fixed-text, 1 free-text
    std::string keyboard_condition;
};

/// Reads a Buffalo manifest CSV: `path,subject,session,task,keyboard_condition`.
std::vector<BuffaloManifestEntry> read_buffalo_manifest(const std::filesystem::path& path);

struct BuffaloOptions {
    std::optional<int> task;               // 0, 1, or unset for both
    std::set<int> sessions;                // empty = all sessions
    std::string keyboard_condition;        // empty = all
    ValidationOptions validation;
};

/// Runs the full Buffalo pipeline: manifest-listed files are parsed,
/// filtered by task/session/keyboard, and merged with per-subject
/// chronological order (session-major).
FeatureTable ingest_buffalo(const std::filesystem::path& root,
                            const std::vector<BuffaloManifestEntry>& manifest,
                            const BuffaloOptions& opts, ParseReport& report);

/// Parses an Aalto keystroke export. The delimiter (tab or comma) is
/// detected from the header. Required columns: PARTICIPANT_ID,
/// TEST_SECTION_ID, PRESS_TIME, RELEASE_TIME and LETTER or KEYCODE.
/// Digraph rows never span test-section boundaries.
FeatureTable parse_aalto(const std::filesystem::path& path, ParseReport& report,
                         const ValidationOptions& opts = {});

/// Reads pre-extracted Nanglae-Bhattarakosol CSV files (canonical columns,
/// any order) and merges them in argument order. A file whose median hold
/// time exceeds 5 is rejected as unconverted milliseconds.
FeatureTable parse_nanglae(const std::vector<std::filesystem::path>& paths,
                           ParseReport& report, const ValidationOptions& opts = {});

}  // namespace ksdyn
