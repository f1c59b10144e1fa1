#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ksdyn/types.hpp"

namespace ksdyn {

struct HoldMixture {
    std::vector<double> weights;
    std::vector<double> means;  // seconds, > 0
    std::vector<double> stds;   // seconds, > 0
};

struct TypistSpec {
    std::string subject;
    // Overrides keyed by digraph label; anything else uses hold_default.
    std::map<std::string, HoldMixture> hold_by_digraph;
    HoldMixture hold_default;
    double ud_mean = 0.1;  // seconds
    double ud_std = 0.02;
    std::size_t count = 0;  // rows to draw
    std::uint64_t seed = 0;
};

/// Draws `count` rows per typist: digraph uniform over the vocabulary, H
/// from the digraph's mixture, UD from the typist's UD distribution, both
/// truncated at zero by resampling, DD = H + UD. Deterministic per seed.
FeatureTable generate(std::span<const TypistSpec> specs,
                      std::span<const std::string> vocabulary);

struct SynthConfig {
    std::vector<std::string> vocabulary;  // digraph labels
    std::vector<TypistSpec> typists;
};

/// JSON spec file: {"vocabulary": [["a","b"], ...], "typists": [...]}.
SynthConfig parse_synth_config(const std::string& json_text);
SynthConfig read_synth_config(const std::filesystem::path& path);

}  // namespace ksdyn
