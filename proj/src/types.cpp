#include "ksdyn/types.hpp"

#include <cmath>
#include <unordered_map>

#include "ksdyn/error.hpp"

namespace ksdyn {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::FileEmpty: return "FileEmpty";
        case ErrorCode::HeaderMismatch: return "HeaderMismatch";
        case ErrorCode::MissingColumn: return "MissingColumn";
        case ErrorCode::UnitSuspicion: return "UnitSuspicion";
        case ErrorCode::NoCompletePairs: return "NoCompletePairs";
        case ErrorCode::InsufficientData: return "InsufficientData";
        case ErrorCode::NonFiniteInput: return "NonFiniteInput";
        case ErrorCode::TooShort: return "TooShort";
        case ErrorCode::EmptyShared: return "EmptyShared";
        case ErrorCode::EmptyProbe: return "EmptyProbe";
        case ErrorCode::EmptyTrials: return "EmptyTrials";
        case ErrorCode::EmptyGallery: return "EmptyGallery";
        case ErrorCode::NoImpostors: return "NoImpostors";
        case ErrorCode::UnknownSubject: return "UnknownSubject";
        case ErrorCode::InvalidSpec: return "InvalidSpec";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Error";
}

std::string make_digraph_label(const std::string& first, const std::string& second) {
    return first + kDigraphArrow + second;
}

std::pair<std::string, std::string> split_digraph_label(const std::string& label) {
    const auto pos = label.find(kDigraphArrow);
    if (pos == std::string::npos) return {label, std::string()};
    return {label.substr(0, pos), label.substr(pos + std::string(kDigraphArrow).size())};
}

const char* dataset_tag_name(DatasetTag tag) {
    switch (tag) {
        case DatasetTag::Aalto: return "aalto";
        case DatasetTag::BuffaloFixed: return "buffalo-fixed";
        case DatasetTag::BuffaloFree: return "buffalo-free";
        case DatasetTag::Nanglae: return "nanglae";
        case DatasetTag::Synthetic: return "synthetic";
    }
    return "unknown";
}

DatasetTag dataset_tag_from_name(const std::string& name) {
    if (name == "aalto") return DatasetTag::Aalto;
    if (name == "buffalo-fixed") return DatasetTag::BuffaloFixed;
    if (name == "buffalo-free") return DatasetTag::BuffaloFree;
    if (name == "nanglae") return DatasetTag::Nanglae;
    if (name == "synthetic") return DatasetTag::Synthetic;
    throw Error(ErrorCode::InvalidArgument, "unknown dataset tag '" + name + "'");
}

std::vector<std::string> FeatureTable::subjects() const {
    std::vector<std::string> out;
    std::unordered_map<std::string, bool> seen;
    for (const auto& row : rows) {
        if (!seen[row.subject]) {
            seen[row.subject] = true;
            out.push_back(row.subject);
        }
    }
    return out;
}

std::span<const FeatureRow> FeatureTable::rows_for(const std::string& subject) const {
    std::size_t begin = rows.size();
    std::size_t end = rows.size();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].subject == subject) {
            begin = i;
            end = i + 1;
            while (end < rows.size() && rows[end].subject == subject) ++end;
            break;
        }
    }
    return std::span<const FeatureRow>(rows.data() + begin, end - begin);
}

std::vector<Sample> segment_samples(const std::string& subject,
                                    std::span<const FeatureRow> rows, std::size_t block) {
    if (block == 0) throw Error(ErrorCode::InvalidArgument, "sample block size must be > 0");
    std::vector<Sample> out;
    const std::size_t full = rows.size() / block;
    if (full == 0) {
        if (!rows.empty()) {
            out.push_back(Sample{subject, {rows.begin(), rows.end()}, 0});
        }
        return out;
    }
    out.reserve(full);
    for (std::size_t i = 0; i < full; ++i) {
        auto slice = rows.subspan(i * block, block);
        out.push_back(Sample{subject, {slice.begin(), slice.end()}, i});
    }
    return out;
}

RowValidity validate_row(const FeatureRow& row, const ValidationOptions& opts) {
    using Kind = RowValidity::Kind;
    if (!std::isfinite(row.hold) || !std::isfinite(row.up_down) || !std::isfinite(row.down_down)) {
        return {false, "non-finite value", Kind::NonFinite};
    }
    if (row.hold <= 0.0) return {false, "H must be > 0", Kind::NonPositive};
    if (row.down_down <= 0.0) return {false, "DD must be > 0", Kind::NonPositive};
    if (row.up_down < 0.0 && !opts.allow_negative_ud) {
        return {false, "negative UD", Kind::NegativeUd};
    }
    if (row.hold > opts.pause_cutoff) return {false, "H exceeds pause cutoff", Kind::Pause};
    if (row.down_down > opts.pause_cutoff) {
        return {false, "DD exceeds pause cutoff", Kind::Pause};
    }
    return {};
}

}  // namespace ksdyn
