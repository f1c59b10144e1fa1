#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ksdyn/csv.hpp"
#include "ksdyn/detector.hpp"
#include "ksdyn/error.hpp"
#include "ksdyn/eval.hpp"
#include "ksdyn/ingest.hpp"
#include "ksdyn/store.hpp"
#include "ksdyn/svg.hpp"
#include "ksdyn/synth.hpp"
#include "ksdyn/util.hpp"
#include "ksdyn/version.hpp"

namespace {

using ksdyn::DatasetTag;
using ksdyn::DetectorKind;
using ksdyn::Error;
using ksdyn::ErrorCode;
using ksdyn::FeatureTable;

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorCode::IoError, "short write: " + path.string());
}

/// Run-manifest hash: every output embeds it, identical configs share it.
std::string manifest_hex(const nlohmann::json& config) {
    return ksdyn::hex64(ksdyn::fnv1a64(config.dump()));
}

struct DatasetArg {
    DatasetTag tag = DatasetTag::Synthetic;
    std::string path;
};

DatasetArg parse_dataset_arg(const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 >= spec.size())
        throw Error(ErrorCode::InvalidArgument,
                    "--dataset expects TAG=PATH, got: " + spec);
    return {ksdyn::dataset_tag_from_name(spec.substr(0, eq)),
            spec.substr(eq + 1)};
}

bool is_fixed_text(DatasetTag tag) {
    return tag == DatasetTag::Aalto || tag == DatasetTag::BuffaloFixed ||
           tag == DatasetTag::Nanglae;
}

void warn_gp_fixed_text(DatasetTag tag) {
    if (is_fixed_text(tag))
        std::fprintf(stderr,
                     "warning: gp works best with free text; %s is a "
                     "fixed-text dataset\n",
                     ksdyn::dataset_tag_name(tag));
}

struct ProtocolArgs {
    double split = 0.7;
    std::size_t impostor_count = 5;
    std::size_t probe_block = 0;  // 0 = detector default
    std::size_t min_rows = 10;
    double grid_step = 0.001;
};

void add_protocol_flags(CLI::App* cmd, ProtocolArgs& args) {
    cmd->add_option("--split", args.split, "Train fraction of each stream");
    cmd->add_option("--impostor-count", args.impostor_count,
                    "Impostor samples drawn per other subject");
    cmd->add_option("--probe-block", args.probe_block,
                    "Rows per probe sample (0 = detector default)");
    cmd->add_option("--min-rows", args.min_rows,
                    "Minimum rows a subject needs to be evaluated");
    cmd->add_option("--grid-step", args.grid_step,
                    "Threshold sweep resolution");
}

ksdyn::EvalProtocol to_protocol(const ProtocolArgs& args) {
    ksdyn::EvalProtocol protocol;
    protocol.split = args.split;
    protocol.impostor_count = args.impostor_count;
    protocol.probe_block = args.probe_block;
    protocol.min_rows = args.min_rows;
    protocol.grid_step = args.grid_step;
    return protocol;
}

nlohmann::json protocol_json(const ProtocolArgs& args) {
    return {{"split", args.split},
            {"impostor_count", args.impostor_count},
            {"probe_block", args.probe_block},
            {"min_rows", args.min_rows},
            {"grid_step", args.grid_step}};
}

// ---------------------------------------------------------------- ingest

struct IngestArgs {
    std::string format;
    std::string input;
    std::string output;
    std::vector<std::string> extra;
    std::string manifest;
    std::string task;  // "", "fixed", "free"
    std::vector<int> sessions;
    std::string keyboard;
    bool allow_negative_ud = false;
    double pause_cutoff = 10.0;
};

int run_ingest(const IngestArgs& args) {
    nlohmann::json config;
    config["command"] = "ingest";
    config["version"] = ksdyn::kVersion;
    config["format"] = args.format;
    std::vector<std::string> inputs = {args.input};
    inputs.insert(inputs.end(), args.extra.begin(), args.extra.end());
    config["inputs"] = inputs;
    config["allow_negative_ud"] = args.allow_negative_ud;
    config["pause_cutoff"] = args.pause_cutoff;
    if (!args.manifest.empty()) config["buffalo_manifest"] = args.manifest;
    if (!args.task.empty()) config["task"] = args.task;
    if (!args.sessions.empty()) config["sessions"] = args.sessions;
    if (!args.keyboard.empty()) config["keyboard_condition"] = args.keyboard;

    ksdyn::ValidationOptions validation;
    validation.allow_negative_ud = args.allow_negative_ud;
    validation.pause_cutoff = args.pause_cutoff;

    ksdyn::ParseReport report;
    FeatureTable table;
    if (args.format == "aalto") {
        table = ksdyn::parse_aalto(args.input, report, validation);
    } else if (args.format == "buffalo") {
        if (args.manifest.empty())
            throw Error(ErrorCode::InvalidArgument,
                        "buffalo ingest needs --manifest");
        const auto entries = ksdyn::read_buffalo_manifest(args.manifest);
        ksdyn::BuffaloOptions opts;
        opts.validation = validation;
        if (args.task == "fixed")
            opts.task = 0;
        else if (args.task == "free")
            opts.task = 1;
        else if (!args.task.empty())
            throw Error(ErrorCode::InvalidArgument,
                        "--task must be fixed or free");
        opts.sessions.insert(args.sessions.begin(), args.sessions.end());
        opts.keyboard_condition = args.keyboard;
        table = ksdyn::ingest_buffalo(args.input, entries, opts, report);
        table.source = args.task == "fixed" ? DatasetTag::BuffaloFixed
                                            : DatasetTag::BuffaloFree;
    } else if (args.format == "nanglae") {
        std::vector<std::filesystem::path> paths = {args.input};
        for (const auto& extra : args.extra) paths.emplace_back(extra);
        table = ksdyn::parse_nanglae(paths, report, validation);
    } else if (args.format == "synthetic-spec") {
        const auto synth = ksdyn::read_synth_config(args.input);
        table = ksdyn::generate(synth.typists, synth.vocabulary);
        report.rows_emitted = table.rows.size();
    } else {
        throw Error(ErrorCode::InvalidArgument,
                    "unknown format: " + args.format);
    }

    ksdyn::write_canonical_csv(table, args.output,
                               "manifest " + manifest_hex(config));
    std::printf("%s", report.summary().c_str());
    std::printf("wrote %zu rows, %zu subjects -> %s\n", table.rows.size(),
                table.subjects().size(), args.output.c_str());
    return 0;
}

// -------------------------------------------------------------- evaluate

struct EvaluateArgs {
    std::vector<std::string> datasets;   // TAG=PATH
    std::vector<std::string> detectors;  // empty = all three
    ProtocolArgs protocol;
    std::uint64_t seed = 0;
    std::size_t gmm_components = 2;
    std::string gp_measure = "R23A23";
    double gp_t = 1.25;
    std::size_t gp_block = ksdyn::kGpDefaultBlock;
    double gp_rescue = 1.1;
    double gp_k = 1.0;
    std::string out;
};

std::unique_ptr<ksdyn::Detector> build_detector(DetectorKind kind,
                                                const EvaluateArgs& args) {
    if (kind == DetectorKind::Gp) {
        ksdyn::GpDetector::Options options;
        options.spec = ksdyn::MeasureSpec::parse(args.gp_measure, args.gp_t);
        options.rescue_factor = args.gp_rescue;
        options.block = args.gp_block;
        return std::make_unique<ksdyn::GpDetector>(options);
    }
    return ksdyn::make_detector(kind, args.seed, args.gmm_components);
}

int run_evaluate(const EvaluateArgs& args) {
    auto detectors = args.detectors;
    if (detectors.empty()) detectors = {"mahalanobis", "gmm", "gp"};
    std::vector<DatasetArg> datasets;
    for (const auto& spec : args.datasets)
        datasets.push_back(parse_dataset_arg(spec));
    for (const auto& name : detectors)
        ksdyn::detector_kind_from_name(name);  // validate before any work
    ksdyn::MeasureSpec::parse(args.gp_measure, args.gp_t);

    nlohmann::json config;
    config["command"] = "evaluate";
    config["version"] = ksdyn::kVersion;
    {
        auto list = nlohmann::json::array();
        for (const auto& dataset : datasets)
            list.push_back({{"tag", ksdyn::dataset_tag_name(dataset.tag)},
                            {"path", dataset.path}});
        config["datasets"] = list;
    }
    config["detectors"] = detectors;
    config["protocol"] = protocol_json(args.protocol);
    config["seed"] = args.seed;
    config["gmm"] = {{"components", args.gmm_components}};
    config["gp"] = {{"measure", args.gp_measure},
                    {"t", args.gp_t},
                    {"block", args.gp_block},
                    {"rescue_factor", args.gp_rescue}};
    const auto hex = manifest_hex(config);

    const std::filesystem::path out_dir(args.out);
    std::filesystem::create_directories(out_dir);
    {
        nlohmann::json manifest = config;
        manifest["hash"] = hex;
        write_text(out_dir / "run_manifest.json", manifest.dump(2) + "\n");
    }

    // Load each dataset once; a load failure fails that dataset's pairs
    // but the run continues.
    std::map<std::string, FeatureTable> tables;
    std::map<std::string, std::string> load_errors;
    for (const auto& dataset : datasets) {
        const std::string tag = ksdyn::dataset_tag_name(dataset.tag);
        try {
            tables.emplace(tag,
                           ksdyn::read_canonical_csv(dataset.path, dataset.tag));
        } catch (const Error& error) {
            load_errors.emplace(tag, error.what());
            std::fprintf(stderr, "dataset %s: %s\n", tag.c_str(),
                         error.what());
        }
    }

    const auto protocol = to_protocol(args.protocol);
    std::vector<ksdyn::EvalReport> reports;
    std::size_t pairs = 0, failed = 0;
    for (const auto& dataset : datasets) {
        const std::string tag = ksdyn::dataset_tag_name(dataset.tag);
        for (const auto& name : detectors) {
            ++pairs;
            if (load_errors.count(tag)) {
                ++failed;
                continue;
            }
            const auto kind = ksdyn::detector_kind_from_name(name);
            if (kind == DetectorKind::Gp) warn_gp_fixed_text(dataset.tag);
            try {
                const auto detector = build_detector(kind, args);
                auto report =
                    ksdyn::evaluate(*detector, tables.at(tag), protocol);
                for (const auto& [subject, message] : report.failures)
                    std::fprintf(stderr, "%s/%s: subject %s: %s\n",
                                 name.c_str(), tag.c_str(), subject.c_str(),
                                 message.c_str());
                std::printf("%s on %s: subjects=%zu auc=%.3f eer=%.3f\n",
                            name.c_str(), tag.c_str(), report.subject_count,
                            report.pooled.auc, report.pooled.eer);
                const std::string base = name + "_" + tag;
                const std::string title = name + " on " + tag;
                write_text(out_dir / ("roc_" + base + ".csv"),
                           "# manifest " + hex + "\n" +
                               ksdyn::roc_csv(report.pooled));
                write_text(out_dir / ("roc_" + base + ".svg"),
                           "<!-- manifest " + hex + " -->\n" +
                               ksdyn::roc_svg(report.pooled, title));
                write_text(out_dir / ("threshold_" + base + ".svg"),
                           "<!-- manifest " + hex + " -->\n" +
                               ksdyn::threshold_svg(report.pooled, title));
                reports.push_back(std::move(report));
            } catch (const Error& error) {
                ++failed;
                std::fprintf(stderr, "%s/%s failed: %s\n", name.c_str(),
                             tag.c_str(), error.what());
            }
        }
    }
    write_text(out_dir / "summary.csv",
               "# manifest " + hex + "\n" + ksdyn::summary_csv(reports));
    return failed == pairs ? 1 : 0;
}

// -------------------------------------------------------------- gp-table

struct GpTableArgs {
    std::string dataset;  // TAG=PATH
    ProtocolArgs protocol;
    double t = 1.25;
    std::size_t block = ksdyn::kGpDefaultBlock;
    double rescue = 1.1;
    std::string out;
};

int run_gp_table(const GpTableArgs& args) {
    const auto dataset = parse_dataset_arg(args.dataset);
    nlohmann::json config;
    config["command"] = "gp-table";
    config["version"] = ksdyn::kVersion;
    config["dataset"] = {{"tag", ksdyn::dataset_tag_name(dataset.tag)},
                         {"path", dataset.path}};
    config["protocol"] = protocol_json(args.protocol);
    config["gp"] = {{"t", args.t},
                    {"block", args.block},
                    {"rescue_factor", args.rescue}};
    const auto hex = manifest_hex(config);

    warn_gp_fixed_text(dataset.tag);
    const auto table = ksdyn::read_canonical_csv(dataset.path, dataset.tag);
    const auto rows = ksdyn::gp_table(table, to_protocol(args.protocol),
                                      args.t, args.block, args.rescue);

    std::string csv = "measure,far_percent,frr_percent,k\n";
    std::printf("%-10s %8s %8s %8s\n", "measure", "FAR%", "FRR%", "k");
    char buf[160];
    for (const auto& row : rows) {
        std::printf("%-10s %8.2f %8.2f %8.3f\n", row.measure.c_str(),
                    100.0 * row.far, 100.0 * row.frr, row.k);
        std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%.6f\n",
                      row.measure.c_str(), 100.0 * row.far, 100.0 * row.frr,
                      row.k);
        csv += buf;
    }
    const std::filesystem::path out_dir(args.out);
    std::filesystem::create_directories(out_dir);
    write_text(out_dir / "gp_table.csv", "# manifest " + hex + "\n" + csv);
    return 0;
}

// ----------------------------------------------------------------- train

struct TrainArgs {
    std::string dataset;  // TAG=PATH
    std::string detector;
    std::string store;
    std::uint64_t seed = 0;
    std::size_t gmm_components = 2;
    std::string gp_measure = "R23A23";
    double gp_t = 1.25;
    std::size_t gp_block = ksdyn::kGpDefaultBlock;
    double gp_rescue = 1.1;
};

std::size_t enroll_all(ksdyn::Detector& detector, const FeatureTable& table) {
    for (const auto& subject : table.subjects()) {
        try {
            detector.enroll(subject, table.rows_for(subject));
        } catch (const Error& error) {
            std::fprintf(stderr, "subject %s: %s\n", subject.c_str(),
                         error.what());
        }
    }
    detector.finalize();
    for (const auto& [subject, message] : detector.finalize_failures())
        std::fprintf(stderr, "subject %s: %s\n", subject.c_str(),
                     message.c_str());
    return detector.active_subjects().size();
}

int run_train(const TrainArgs& args) {
    const auto dataset = parse_dataset_arg(args.dataset);
    const auto kind = ksdyn::detector_kind_from_name(args.detector);

    nlohmann::json config;
    config["command"] = "train";
    config["version"] = ksdyn::kVersion;
    config["dataset"] = {{"tag", ksdyn::dataset_tag_name(dataset.tag)},
                         {"path", dataset.path}};
    config["detector"] = args.detector;
    config["seed"] = args.seed;
    config["gmm"] = {{"components", args.gmm_components}};
    config["gp"] = {{"measure", args.gp_measure},
                    {"t", args.gp_t},
                    {"block", args.gp_block},
                    {"rescue_factor", args.gp_rescue}};
    const auto comment = "manifest " + manifest_hex(config);

    const auto table = ksdyn::read_canonical_csv(dataset.path, dataset.tag);
    std::size_t stored = 0;
    if (kind == DetectorKind::Mahalanobis) {
        ksdyn::MahalanobisDetector detector;
        stored = enroll_all(detector, table);
        if (stored > 0) ksdyn::save_store(args.store, detector, comment);
    } else if (kind == DetectorKind::Gmm) {
        ksdyn::GmmDetector::Options options;
        options.components = args.gmm_components;
        options.seed = args.seed;
        ksdyn::GmmDetector detector(options);
        stored = enroll_all(detector, table);
        if (stored > 0) ksdyn::save_store(args.store, detector, comment);
    } else {
        warn_gp_fixed_text(dataset.tag);
        ksdyn::GpDetector::Options options;
        options.spec = ksdyn::MeasureSpec::parse(args.gp_measure, args.gp_t);
        options.rescue_factor = args.gp_rescue;
        options.block = args.gp_block;
        ksdyn::GpDetector detector(options);
        stored = enroll_all(detector, table);
        if (stored > 0) ksdyn::save_store(args.store, detector, comment);
    }
    if (stored == 0)
        throw Error(ErrorCode::InsufficientData,
                    "no subject could be enrolled");
    std::printf("stored %zu %s profiles in %s\n", stored,
                args.detector.c_str(), args.store.c_str());
    return 0;
}

// ----------------------------------------------------------------- score

struct ScoreArgs {
    std::string store;
    std::string detector;
    std::string probe;
    std::size_t probe_block = 0;
    double gp_k = 1.0;
    std::string gp_measure = "R23A23";
    double gp_t = 1.25;
    double gp_rescue = 1.1;
};

int run_score(const ScoreArgs& args) {
    const auto kind = ksdyn::detector_kind_from_name(args.detector);
    const auto probes = ksdyn::read_canonical_csv(args.probe);

    std::unique_ptr<ksdyn::Detector> detector;
    ksdyn::GpDetector* gp = nullptr;
    if (kind == DetectorKind::Mahalanobis) {
        auto owned = std::make_unique<ksdyn::MahalanobisDetector>();
        ksdyn::load_store(args.store, *owned);
        detector = std::move(owned);
    } else if (kind == DetectorKind::Gmm) {
        auto owned = std::make_unique<ksdyn::GmmDetector>();
        ksdyn::load_store(args.store, *owned);
        detector = std::move(owned);
    } else {
        ksdyn::GpDetector::Options options;
        options.spec = ksdyn::MeasureSpec::parse(args.gp_measure, args.gp_t);
        options.rescue_factor = args.gp_rescue;
        auto owned = std::make_unique<ksdyn::GpDetector>(options);
        ksdyn::load_store(args.store, *owned);
        gp = owned.get();
        detector = std::move(owned);
    }
    if (detector->active_subjects().empty())
        throw Error(ErrorCode::InsufficientData,
                    "no profiles for detector " + args.detector + " in " +
                        args.store);

    const std::size_t block =
        args.probe_block > 0 ? args.probe_block : detector->default_block();
    std::size_t scored = 0;
    for (const auto& subject : probes.subjects()) {
        const auto samples =
            ksdyn::segment_samples(subject, probes.rows_for(subject), block);
        for (const auto& sample : samples) {
            try {
                const double value = detector->score(subject, sample.rows);
                if (gp) {
                    const auto tables = ksdyn::build_sample_tables_frozen(
                        sample.rows, gp->index());
                    const auto auth = ksdyn::authenticate(
                        tables, subject, gp->gallery(), gp->options().spec,
                        args.gp_k, args.gp_rescue);
                    std::printf("%s %zu %.6f %s\n", subject.c_str(),
                                sample.ordinal, value,
                                auth.accepted ? "accept" : "reject");
                } else {
                    std::printf("%s %zu %.6f\n", subject.c_str(),
                                sample.ordinal, value);
                }
                ++scored;
            } catch (const Error& error) {
                std::fprintf(stderr, "%s sample %zu: %s\n", subject.c_str(),
                             sample.ordinal, error.what());
            }
        }
    }
    if (scored == 0)
        throw Error(ErrorCode::UnknownSubject, "no probe could be scored");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Keystroke-dynamics benchmark toolkit"};
    app.set_version_flag("--version", std::string(ksdyn::kVersion));
    app.require_subcommand(1);

    IngestArgs ingest_args;
    auto* ingest = app.add_subcommand(
        "ingest", "Convert a raw dataset to the canonical feature CSV");
    ingest
        ->add_option("format", ingest_args.format,
                     "aalto, buffalo, nanglae, or synthetic-spec")
        ->required();
    ingest->add_option("input", ingest_args.input, "Dataset file or root dir")
        ->required();
    ingest->add_option("output", ingest_args.output, "Canonical CSV to write")
        ->required();
    ingest->add_option("--extra", ingest_args.extra,
                       "Additional input files (nanglae)");
    ingest->add_option("--manifest", ingest_args.manifest,
                       "Buffalo manifest CSV (path,subject,session,task,"
                       "keyboard_condition)");
    ingest->add_option("--task", ingest_args.task,
                       "Buffalo task filter: fixed or free");
    ingest->add_option("--sessions", ingest_args.sessions,
                       "Buffalo session filter");
    ingest->add_option("--keyboard-condition", ingest_args.keyboard,
                       "Buffalo keyboard condition filter");
    ingest->add_flag("--allow-negative-ud", ingest_args.allow_negative_ud,
                     "Keep rows with negative up-down latency");
    ingest->add_option("--pause-cutoff", ingest_args.pause_cutoff,
                       "Drop rows with hold or down-down above this (s)");

    EvaluateArgs evaluate_args;
    auto* evaluate = app.add_subcommand(
        "evaluate", "Run detector x dataset evaluations, write reports");
    evaluate
        ->add_option("--dataset", evaluate_args.datasets,
                     "TAG=PATH with TAG one of aalto, buffalo-fixed, "
                     "buffalo-free, nanglae, synthetic")
        ->required();
    evaluate->add_option("--detector", evaluate_args.detectors,
                         "mahalanobis, gmm, gp (default: all three)");
    add_protocol_flags(evaluate, evaluate_args.protocol);
    evaluate->add_option("--seed", evaluate_args.seed, "Base RNG seed");
    evaluate->add_option("--gmm-components", evaluate_args.gmm_components,
                         "Mixture components per digraph");
    evaluate->add_option("--gp-measure", evaluate_args.gp_measure,
                         "Distance measure, e.g. R23A23");
    evaluate->add_option("--gp-t", evaluate_args.gp_t,
                         "Duration similarity threshold (> 1)");
    evaluate->add_option("--gp-block", evaluate_args.gp_block,
                         "Rows per enrollment sample");
    evaluate->add_option("--gp-rescue", evaluate_args.gp_rescue,
                         "Near-miss rescue factor");
    evaluate->add_option("--gp-k", evaluate_args.gp_k,
                         "Self-threshold multiplier (accepted for parity; "
                         "sweeps cover all k)");
    evaluate->add_option("--out", evaluate_args.out, "Output directory")
        ->required();

    GpTableArgs gp_table_args;
    auto* gp_table = app.add_subcommand(
        "gp-table", "FAR/FRR for the nine n-graph distance measures");
    gp_table->add_option("--dataset", gp_table_args.dataset, "TAG=PATH")
        ->required();
    add_protocol_flags(gp_table, gp_table_args.protocol);
    gp_table->add_option("--gp-t", gp_table_args.t,
                         "Duration similarity threshold (> 1)");
    gp_table->add_option("--gp-block", gp_table_args.block,
                         "Rows per enrollment sample");
    gp_table->add_option("--gp-rescue", gp_table_args.rescue,
                         "Near-miss rescue factor");
    gp_table->add_option("--out", gp_table_args.out, "Output directory")
        ->required();

    TrainArgs train_args;
    auto* train = app.add_subcommand(
        "train", "Fit profiles on a full dataset and save them");
    train->add_option("--dataset", train_args.dataset, "TAG=PATH")
        ->required();
    train->add_option("--detector", train_args.detector,
                      "mahalanobis, gmm, or gp")
        ->required();
    train->add_option("--store", train_args.store, "Profile store directory")
        ->required();
    train->add_option("--seed", train_args.seed, "Base RNG seed");
    train->add_option("--gmm-components", train_args.gmm_components,
                      "Mixture components per digraph");
    train->add_option("--gp-measure", train_args.gp_measure,
                      "Distance measure, e.g. R23A23");
    train->add_option("--gp-t", train_args.gp_t,
                      "Duration similarity threshold (> 1)");
    train->add_option("--gp-block", train_args.gp_block,
                      "Rows per enrollment sample");
    train->add_option("--gp-rescue", train_args.gp_rescue,
                      "Near-miss rescue factor");

    ScoreArgs score_args;
    auto* score = app.add_subcommand(
        "score", "Score probe samples against a saved profile store");
    score->add_option("--store", score_args.store, "Profile store directory")
        ->required();
    score->add_option("--detector", score_args.detector,
                      "mahalanobis, gmm, or gp")
        ->required();
    score->add_option("--probe", score_args.probe, "Canonical probe CSV")
        ->required();
    score->add_option("--probe-block", score_args.probe_block,
                      "Rows per probe sample (0 = detector default)");
    score->add_option("--gp-k", score_args.gp_k,
                      "Self-threshold multiplier for accept/reject");
    score->add_option("--gp-measure", score_args.gp_measure,
                      "Distance measure, e.g. R23A23");
    score->add_option("--gp-t", score_args.gp_t,
                      "Duration similarity threshold (> 1)");
    score->add_option("--gp-rescue", score_args.gp_rescue,
                      "Near-miss rescue factor");

    int rc = 0;
    ingest->callback([&] { rc = run_ingest(ingest_args); });
    evaluate->callback([&] { rc = run_evaluate(evaluate_args); });
    gp_table->callback([&] { rc = run_gp_table(gp_table_args); });
    train->callback([&] { rc = run_train(train_args); });
    score->callback([&] { rc = run_score(score_args); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.code() == ErrorCode::IoError ? 3 : 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return rc;
}
