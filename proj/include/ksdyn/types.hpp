#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ksdyn {

enum class KeyAction { Down, Up };

/// One raw key press or release, timestamp in seconds (converted from
/// source units at parse time; only differences between timestamps matter).
struct KeystrokeEvent {
    std::string key;
    KeyAction action = KeyAction::Down;
    double timestamp = 0.0;
};

/// Separator between the two key labels of a digraph label.
inline constexpr const char* kDigraphArrow = "→";  // "→"

std::string make_digraph_label(const std::string& first, const std::string& second);

/// Splits "K1→K2" at the first arrow. Returns {label, ""} if no arrow present.
std::pair<std::string, std::string> split_digraph_label(const std::string& label);

/// Canonical feature record: hold time of the first key of the digraph,
/// up-down and down-down latencies to the second key. Times in seconds.
struct FeatureRow {
    std::string subject;
    std::string key;  // digraph label "K1→K2", raw key labels, case preserved
    double hold = 0.0;
    double up_down = 0.0;
    double down_down = 0.0;
};

enum class DatasetTag { Aalto, BuffaloFixed, BuffaloFree, Nanglae, Synthetic };

const char* dataset_tag_name(DatasetTag tag);
DatasetTag dataset_tag_from_name(const std::string& name);

/// Rows are kept in per-subject chronological order; the prefix-based
/// train/test split and the first-N-samples impostor protocol depend on it.
struct FeatureTable {
    std::vector<FeatureRow> rows;
    DatasetTag source = DatasetTag::Synthetic;

    /// Subjects in order of first appearance.
    std::vector<std::string> subjects() const;
    /// Contiguous row range of one subject (rows are grouped by subject).
    std::span<const FeatureRow> rows_for(const std::string& subject) const;
};

/// A contiguous slice of one subject's stream, used as the unit of
/// enrollment and probing.
struct Sample {
    std::string subject;
    std::vector<FeatureRow> rows;
    std::size_t ordinal = 0;
};

/// Splits a subject's rows into consecutive non-overlapping blocks of
/// `block` rows. Only full blocks are kept, except when no full block
/// fits: then the whole stream becomes a single sample.
std::vector<Sample> segment_samples(const std::string& subject,
                                    std::span<const FeatureRow> rows, std::size_t block);

struct ValidationOptions {
    bool allow_negative_ud = false;
    double pause_cutoff = 10.0;  // seconds; rows with hold or down-down above it are invalid
};

struct RowValidity {
    bool valid = true;
    std::string reason;  // empty when valid

    enum class Kind { Ok, NonFinite, NonPositive, NegativeUd, Pause } kind = Kind::Ok;
};

/// Pure classification, never aborts.
RowValidity validate_row(const FeatureRow& row, const ValidationOptions& opts = {});

}  // namespace ksdyn
