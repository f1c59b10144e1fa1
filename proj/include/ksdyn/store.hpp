#pragma once

#include <filesystem>
#include <string>

#include "ksdyn/detector.hpp"

namespace ksdyn {

/// Text profile records, one file per subject per detector, magic line
/// "KSDYN1 <detector>". Labels are percent-escaped; floats use the
/// shortest exact decimal form. Writing is deterministic byte for byte.

std::string serialize_profile(const MahalanobisModel& model);
MahalanobisModel parse_mahalanobis_profile(const std::string& text);

std::string serialize_profile(const GmmUserModel& model);
GmmUserModel parse_gmm_profile(const std::string& text);

std::string serialize_profile(const GpProfile& profile,
                              const KeyRankIndex& index);
GpProfile parse_gp_profile(const std::string& text, KeyRankIndex& index);

/// Writes every enrolled subject's record into `dir` (created if needed).
/// A non-empty `comment` is embedded as a `# ...` line after the magic;
/// parsers skip comment lines.
void save_store(const std::filesystem::path& dir,
                const MahalanobisDetector& detector,
                const std::string& comment = {});
void save_store(const std::filesystem::path& dir, const GmmDetector& detector,
                const std::string& comment = {});
void save_store(const std::filesystem::path& dir, const GpDetector& detector,
                const std::string& comment = {});

/// Loads every record in `dir` whose magic matches the detector.
void load_store(const std::filesystem::path& dir,
                MahalanobisDetector& detector);
void load_store(const std::filesystem::path& dir, GmmDetector& detector);
void load_store(const std::filesystem::path& dir, GpDetector& detector);

}  // namespace ksdyn
