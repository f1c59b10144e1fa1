#include "ksdyn/synth.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "ksdyn/error.hpp"

namespace ksdyn {

namespace {

double uniform_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Box-Muller without state, so draws stay reproducible across platforms.
double draw_normal(std::mt19937_64& rng, double mean, double std_dev) {
    const double u1 = 1.0 - uniform_unit(rng);  // (0,1]
    const double u2 = uniform_unit(rng);
    const double z =
        std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    return mean + std_dev * z;
}

void check_mixture(const HoldMixture& mixture, const std::string& where) {
    if (mixture.weights.empty() ||
        mixture.weights.size() != mixture.means.size() ||
        mixture.weights.size() != mixture.stds.size())
        throw Error(ErrorCode::InvalidSpec,
                    where + ": weights/means/stds sizes must match");
    double sum = 0.0;
    for (double w : mixture.weights) {
        if (w < 0.0)
            throw Error(ErrorCode::InvalidSpec, where + ": negative weight");
        sum += w;
    }
    if (sum <= 0.0)
        throw Error(ErrorCode::InvalidSpec, where + ": weights sum to zero");
    for (double m : mixture.means)
        if (!(m > 0.0))
            throw Error(ErrorCode::InvalidSpec, where + ": mean must be > 0");
    for (double s : mixture.stds)
        if (!(s > 0.0))
            throw Error(ErrorCode::InvalidSpec, where + ": std must be > 0");
}

double draw_mixture(std::mt19937_64& rng, const HoldMixture& mixture) {
    double total = 0.0;
    for (double w : mixture.weights) total += w;
    double target = uniform_unit(rng) * total;
    std::size_t pick = mixture.weights.size() - 1;
    for (std::size_t i = 0; i < mixture.weights.size(); ++i) {
        target -= mixture.weights[i];
        if (target <= 0.0) {
            pick = i;
            break;
        }
    }
    return draw_normal(rng, mixture.means[pick], mixture.stds[pick]);
}

double draw_positive(std::mt19937_64& rng, const HoldMixture& mixture) {
    for (int attempt = 0; attempt < 100; ++attempt) {
        const double value = draw_mixture(rng, mixture);
        if (value > 0.0) return value;
    }
    throw Error(ErrorCode::InvalidSpec,
                "hold mixture mass is almost entirely non-positive");
}

}  // namespace

FeatureTable generate(std::span<const TypistSpec> specs,
                      std::span<const std::string> vocabulary) {
    if (vocabulary.empty())
        throw Error(ErrorCode::InvalidSpec, "vocabulary is empty");
    for (const auto& spec : specs) {
        if (spec.subject.empty())
            throw Error(ErrorCode::InvalidSpec, "typist without subject id");
        if (spec.count < 1)
            throw Error(ErrorCode::InvalidSpec,
                        spec.subject + ": count must be >= 1");
        if (!(spec.ud_std > 0.0))
            throw Error(ErrorCode::InvalidSpec,
                        spec.subject + ": ud std must be > 0");
        check_mixture(spec.hold_default, spec.subject + " default hold");
        for (const auto& [digraph, mixture] : spec.hold_by_digraph)
            check_mixture(mixture, spec.subject + " " + digraph);
    }

    FeatureTable table;
    table.source = DatasetTag::Synthetic;
    for (const auto& spec : specs) {
        std::mt19937_64 rng(spec.seed);
        for (std::size_t i = 0; i < spec.count; ++i) {
            FeatureRow row;
            row.subject = spec.subject;
            for (int attempt = 0;; ++attempt) {
                const auto& digraph =
                    vocabulary[static_cast<std::size_t>(rng() %
                                                        vocabulary.size())];
                const auto it = spec.hold_by_digraph.find(digraph);
                const HoldMixture& mixture = it != spec.hold_by_digraph.end()
                                                 ? it->second
                                                 : spec.hold_default;
                row.key = digraph;
                row.hold = draw_positive(rng, mixture);
                double ud = draw_normal(rng, spec.ud_mean, spec.ud_std);
                while (ud < 0.0) ud = draw_normal(rng, spec.ud_mean, spec.ud_std);
                row.up_down = ud;
                row.down_down = row.hold + row.up_down;
                if (validate_row(row, {}).valid) break;
                if (attempt >= 100)
                    throw Error(ErrorCode::InvalidSpec,
                                spec.subject +
                                    ": cannot draw a valid row, check the "
                                    "spec's magnitudes");
            }
            table.rows.push_back(std::move(row));
        }
    }
    return table;
}

namespace {

HoldMixture mixture_from_json(const nlohmann::json& node) {
    HoldMixture mixture;
    mixture.weights = node.at("weights").get<std::vector<double>>();
    mixture.means = node.at("means").get<std::vector<double>>();
    mixture.stds = node.at("stds").get<std::vector<double>>();
    return mixture;
}

}  // namespace

SynthConfig parse_synth_config(const std::string& json_text) {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& error) {
        throw Error(ErrorCode::InvalidSpec,
                    std::string("bad spec JSON: ") + error.what());
    }
    try {
        SynthConfig config;
        for (const auto& pair : root.at("vocabulary")) {
            if (!pair.is_array() || pair.size() != 2)
                throw Error(ErrorCode::InvalidSpec,
                            "vocabulary entries are [first, second] pairs");
            config.vocabulary.push_back(make_digraph_label(
                pair.at(0).get<std::string>(), pair.at(1).get<std::string>()));
        }
        for (const auto& node : root.at("typists")) {
            TypistSpec spec;
            spec.subject = node.at("subject").get<std::string>();
            spec.seed = node.at("seed").get<std::uint64_t>();
            spec.count = node.at("count").get<std::size_t>();
            spec.ud_mean = node.at("ud").at("mean").get<double>();
            spec.ud_std = node.at("ud").at("std").get<double>();
            spec.hold_default = mixture_from_json(node.at("hold_default"));
            if (node.contains("hold_overrides")) {
                for (const auto& entry : node.at("hold_overrides")) {
                    const auto& keys = entry.at("keys");
                    if (!keys.is_array() || keys.size() != 2)
                        throw Error(ErrorCode::InvalidSpec,
                                    "hold_overrides keys are [first, second]");
                    spec.hold_by_digraph.emplace(
                        make_digraph_label(keys.at(0).get<std::string>(),
                                           keys.at(1).get<std::string>()),
                        mixture_from_json(entry));
                }
            }
            config.typists.push_back(std::move(spec));
        }
        return config;
    } catch (const nlohmann::json::exception& error) {
        throw Error(ErrorCode::InvalidSpec,
                    std::string("bad spec JSON: ") + error.what());
    }
}

SynthConfig read_synth_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_synth_config(buffer.str());
}

}  // namespace ksdyn
