#include "ksdyn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <mutex>
#include <thread>

#include <limits>

#include "ksdyn/detector.hpp"
#include "ksdyn/error.hpp"
#include "ksdyn/gp.hpp"
#include "ksdyn/util.hpp"

namespace ksdyn {

std::pair<std::span<const FeatureRow>, std::span<const FeatureRow>>
split_70_30(std::span<const FeatureRow> rows, double split) {
    if (rows.size() < 10)
        throw Error(ErrorCode::InsufficientData,
                    "split needs at least 10 rows, got " +
                        std::to_string(rows.size()));
    if (!(split > 0.0 && split < 1.0))
        throw Error(ErrorCode::InvalidArgument, "split must be in (0,1)");
    const auto cut = static_cast<std::size_t>(
        std::floor(split * static_cast<double>(rows.size())));
    return {rows.first(cut), rows.subspan(cut)};
}

std::vector<Sample> impostor_probes(
    const std::map<std::string, std::vector<Sample>>& samples_by_subject,
    const std::string& target, std::size_t count) {
    std::vector<Sample> probes;
    bool have_other = false;
    for (const auto& [subject, samples] : samples_by_subject) {
        if (subject == target) continue;
        have_other = true;
        const std::size_t take = std::min(count, samples.size());
        probes.insert(probes.end(), samples.begin(),
                      samples.begin() + static_cast<std::ptrdiff_t>(take));
    }
    if (!have_other)
        throw Error(ErrorCode::NoImpostors,
                    "no impostor subjects besides " + target);
    return probes;
}

double far(const TrialSet& trials, double threshold) {
    if (trials.impostor_scores.empty())
        throw Error(ErrorCode::EmptyTrials, "no impostor trials");
    std::size_t accepted = 0;
    for (double s : trials.impostor_scores)
        if (s >= threshold) ++accepted;
    return static_cast<double>(accepted) /
           static_cast<double>(trials.impostor_scores.size());
}

double frr(const TrialSet& trials, double threshold) {
    if (trials.genuine_scores.empty())
        throw Error(ErrorCode::EmptyTrials, "no genuine trials");
    std::size_t rejected = 0;
    for (double s : trials.genuine_scores)
        if (s < threshold) ++rejected;
    return static_cast<double>(rejected) /
           static_cast<double>(trials.genuine_scores.size());
}

RocCurve sweep(const TrialSet& trials, double step) {
    if (trials.genuine_scores.empty())
        throw Error(ErrorCode::EmptyTrials, "no genuine trials");
    if (trials.impostor_scores.empty())
        throw Error(ErrorCode::EmptyTrials, "no impostor trials");
    if (!(step > 0.0 && step <= 1.0))
        throw Error(ErrorCode::InvalidArgument, "grid step must be in (0,1]");

    std::vector<double> genuine = trials.genuine_scores;
    std::vector<double> impostor = trials.impostor_scores;
    std::sort(genuine.begin(), genuine.end());
    std::sort(impostor.begin(), impostor.end());
    const auto n_gen = static_cast<double>(genuine.size());
    const auto n_imp = static_cast<double>(impostor.size());

    const auto far_at = [&](double threshold) {
        const auto it =
            std::lower_bound(impostor.begin(), impostor.end(), threshold);
        return static_cast<double>(impostor.end() - it) / n_imp;
    };
    const auto frr_at = [&](double threshold) {
        const auto it =
            std::lower_bound(genuine.begin(), genuine.end(), threshold);
        return static_cast<double>(it - genuine.begin()) / n_gen;
    };

    const auto grid_n = static_cast<std::size_t>(std::llround(1.0 / step));
    RocCurve curve;
    curve.points.reserve(grid_n + 2);
    for (std::size_t i = 0; i <= grid_n; ++i) {
        const double threshold =
            static_cast<double>(i) / static_cast<double>(grid_n);
        curve.points.push_back(
            {threshold, far_at(threshold), frr_at(threshold)});
    }
    // One past-the-end threshold: nothing is accepted there, so the FAR and
    // FRR curves are guaranteed to cross inside the swept range.
    const double past_end = 1.0 + 1.0 / static_cast<double>(grid_n);
    curve.points.push_back({past_end, 0.0, 1.0});

    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        const auto& prev = curve.points[i - 1];
        const auto& curr = curve.points[i];
        if (curr.far > curr.frr) continue;
        const double d0 = prev.far - prev.frr;
        const double d1 = curr.far - curr.frr;
        double alpha = 1.0;
        if (d0 > 0.0) alpha = d0 / (d0 - d1);
        const double far_x = prev.far + alpha * (curr.far - prev.far);
        const double frr_x = prev.frr + alpha * (curr.frr - prev.frr);
        curve.eer = 0.5 * (far_x + frr_x);
        break;
    }

    double auc = 0.0;
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        const auto& prev = curve.points[i - 1];
        const auto& curr = curve.points[i];
        const double dx = prev.far - curr.far;
        const double y0 = 1.0 - prev.frr;
        const double y1 = 1.0 - curr.frr;
        auc += dx * 0.5 * (y0 + y1);
    }
    curve.auc = auc;
    return curve;
}

namespace {

void parallel_over(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const auto workers = static_cast<unsigned>(std::min<std::size_t>(
        worker_count(), std::max<std::size_t>(n, 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += workers) fn(i);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& thread : pool) thread.join();
    if (first_error) std::rethrow_exception(first_error);
}

std::string protocol_descriptor(const EvalProtocol& protocol,
                                std::size_t block) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "split=%g,impostor_count=%zu,block=%zu,min_rows=%zu",
                  protocol.split, protocol.impostor_count, block,
                  protocol.min_rows);
    return buf;
}

}  // namespace

EvalReport evaluate(Detector& detector, const FeatureTable& table,
                    const EvalProtocol& protocol) {
    const auto subjects = table.subjects();
    if (subjects.size() < 2)
        throw Error(ErrorCode::NoImpostors,
                    "evaluation needs at least 2 subjects");

    const std::size_t block = protocol.probe_block > 0
                                  ? protocol.probe_block
                                  : detector.default_block();

    EvalReport report;
    report.detector = detector.name();
    report.dataset = dataset_tag_name(table.source);
    report.protocol = protocol_descriptor(protocol, block);

    // Enrollment is sequential: detectors may mutate shared state.
    std::vector<std::string> enrolled;
    std::map<std::string, std::pair<std::span<const FeatureRow>,
                                    std::span<const FeatureRow>>>
        splits;
    for (const auto& subject : subjects) {
        const auto rows = table.rows_for(subject);
        try {
            if (rows.size() < protocol.min_rows)
                throw Error(ErrorCode::InsufficientData,
                            "subject has " + std::to_string(rows.size()) +
                                " rows, need " +
                                std::to_string(protocol.min_rows));
            const auto split = split_70_30(rows, protocol.split);
            detector.enroll(subject, split.first);
            splits.emplace(subject, split);
            enrolled.push_back(subject);
        } catch (const Error& error) {
            report.failures.emplace_back(subject, error.what());
        }
    }
    if (enrolled.size() < 2)
        throw Error(ErrorCode::NoImpostors,
                    "fewer than 2 subjects enrolled successfully");
    detector.finalize();
    for (const auto& [subject, message] : detector.finalize_failures())
        report.failures.emplace_back(subject, message);
    {
        const auto active = detector.active_subjects();
        std::vector<std::string> kept;
        for (const auto& subject : enrolled)
            if (std::find(active.begin(), active.end(), subject) !=
                active.end())
                kept.push_back(subject);
        enrolled = std::move(kept);
    }
    if (enrolled.size() < 2)
        throw Error(ErrorCode::NoImpostors,
                    "fewer than 2 subjects survived finalize");

    // Impostor probes come from the full stream, not the test split: the
    // protocol reads "first samples", which start at the stream head.
    std::map<std::string, std::vector<Sample>> full_samples;
    for (const auto& subject : subjects)
        full_samples.emplace(
            subject, segment_samples(subject, table.rows_for(subject), block));

    struct Task {
        const Sample* probe;
        std::vector<std::string> targets;  // subjects this probe is scored for
        bool genuine;                      // single-target genuine probe
    };
    std::vector<Task> tasks;
    std::map<std::string, std::vector<Sample>> genuine_samples;
    for (const auto& subject : enrolled) {
        auto samples =
            segment_samples(subject, splits.at(subject).second, block);
        genuine_samples.emplace(subject, std::move(samples));
        for (const auto& sample : genuine_samples.at(subject))
            tasks.push_back({&sample, {subject}, true});
    }
    for (const auto& [subject, samples] : full_samples) {
        std::vector<std::string> targets;
        for (const auto& other : enrolled)
            if (other != subject) targets.push_back(other);
        if (targets.empty()) continue;
        const std::size_t take =
            std::min(protocol.impostor_count, samples.size());
        for (std::size_t i = 0; i < take; ++i)
            tasks.push_back({&samples[i], targets, false});
    }

    std::vector<std::vector<double>> task_scores(tasks.size());
    parallel_over(tasks.size(), [&](std::size_t i) {
        const auto& task = tasks[i];
        task_scores[i].resize(task.targets.size());
        detector.score_many(task.targets, task.probe->rows, task_scores[i]);
    });

    std::map<std::string, SubjectResult> results;
    for (const auto& subject : enrolled) {
        SubjectResult result;
        result.subject = subject;
        result.trials.detector = report.detector;
        result.trials.dataset = report.dataset;
        result.trials.protocol = report.protocol;
        results.emplace(subject, std::move(result));
    }
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const auto& task = tasks[i];
        for (std::size_t t = 0; t < task.targets.size(); ++t) {
            auto& trials = results.at(task.targets[t]).trials;
            (task.genuine ? trials.genuine_scores : trials.impostor_scores)
                .push_back(task_scores[i][t]);
        }
    }

    report.pooled_trials.detector = report.detector;
    report.pooled_trials.dataset = report.dataset;
    report.pooled_trials.protocol = report.protocol;
    for (const auto& subject : enrolled) {
        auto& result = results.at(subject);
        auto& pooled = report.pooled_trials;
        pooled.genuine_scores.insert(pooled.genuine_scores.end(),
                                     result.trials.genuine_scores.begin(),
                                     result.trials.genuine_scores.end());
        pooled.impostor_scores.insert(pooled.impostor_scores.end(),
                                      result.trials.impostor_scores.begin(),
                                      result.trials.impostor_scores.end());
        try {
            result.curve = sweep(result.trials, protocol.grid_step);
            report.per_subject.push_back(std::move(result));
        } catch (const Error& error) {
            report.failures.emplace_back(subject, error.what());
        }
    }
    report.subject_count = report.per_subject.size();
    report.pooled = sweep(report.pooled_trials, protocol.grid_step);
    return report;
}

std::vector<GpTableRow> gp_table(const FeatureTable& table,
                                 const EvalProtocol& protocol, double t,
                                 std::size_t block, double rescue_factor) {
    const auto& names = standard_measure_names();
    std::vector<MeasureSpec> specs;
    specs.reserve(names.size());
    for (const auto& name : names) specs.push_back(MeasureSpec::parse(name, t));
    const std::size_t n_measures = specs.size();

    const auto subjects = table.subjects();
    if (subjects.size() < 2)
        throw Error(ErrorCode::NoImpostors,
                    "evaluation needs at least 2 subjects");

    const KeyRankIndex index(collect_key_labels(table));
    const std::size_t probe_block =
        protocol.probe_block > 0 ? protocol.probe_block : block;

    struct Enrolled {
        std::string subject;
        std::vector<GpSampleTables> train;
        std::vector<double> mean_self;  // one per measure
        std::span<const FeatureRow> test;
    };
    std::vector<Enrolled> gallery;
    for (const auto& subject : subjects) {
        const auto rows = table.rows_for(subject);
        try {
            if (rows.size() < protocol.min_rows)
                throw Error(ErrorCode::InsufficientData,
                            "subject has " + std::to_string(rows.size()) +
                                " rows, need " +
                                std::to_string(protocol.min_rows));
            const auto split = split_70_30(rows, protocol.split);
            const auto samples = segment_samples(subject, split.first, block);
            if (samples.size() < 2)
                throw Error(ErrorCode::InsufficientData,
                            "need at least 2 enrollment samples");
            Enrolled entry;
            entry.subject = subject;
            entry.test = split.second;
            entry.train.reserve(samples.size());
            for (const auto& sample : samples)
                entry.train.push_back(
                    build_sample_tables_frozen(sample.rows, index));
            entry.mean_self.assign(n_measures, 0.0);
            std::size_t pairs = 0;
            for (std::size_t i = 0; i < entry.train.size(); ++i)
                for (std::size_t j = i + 1; j < entry.train.size(); ++j) {
                    const auto terms =
                        compute_pair_terms(entry.train[i], entry.train[j], t);
                    for (std::size_t m = 0; m < n_measures; ++m)
                        entry.mean_self[m] +=
                            combined_from_terms(terms, specs[m]);
                    ++pairs;
                }
            for (auto& v : entry.mean_self) v /= static_cast<double>(pairs);
            gallery.push_back(std::move(entry));
        } catch (const Error&) {
            // Dropped from the gallery; still usable as an impostor source.
        }
    }
    if (gallery.size() < 2)
        throw Error(ErrorCode::NoImpostors,
                    "fewer than 2 subjects enrolled successfully");
    // Sorted gallery makes the first-minimum scan break distance ties
    // toward the lexicographically smaller subject.
    std::sort(gallery.begin(), gallery.end(),
              [](const Enrolled& a, const Enrolled& b) {
                  return a.subject < b.subject;
              });

    struct Task {
        const Sample* probe;
        std::vector<std::size_t> targets;  // indices into the gallery
        bool genuine;
    };
    std::vector<Task> tasks;
    std::vector<std::vector<Sample>> genuine_samples(gallery.size());
    for (std::size_t g = 0; g < gallery.size(); ++g) {
        genuine_samples[g] =
            segment_samples(gallery[g].subject, gallery[g].test, probe_block);
        for (const auto& sample : genuine_samples[g])
            tasks.push_back({&sample, {g}, true});
    }
    std::map<std::string, std::vector<Sample>> full_samples;
    for (const auto& subject : subjects)
        full_samples.emplace(subject, segment_samples(
                                          subject, table.rows_for(subject),
                                          probe_block));
    for (const auto& [subject, samples] : full_samples) {
        std::vector<std::size_t> targets;
        for (std::size_t g = 0; g < gallery.size(); ++g)
            if (gallery[g].subject != subject) targets.push_back(g);
        if (targets.empty()) continue;
        const std::size_t take =
            std::min(protocol.impostor_count, samples.size());
        for (std::size_t i = 0; i < take; ++i)
            tasks.push_back({&samples[i], targets, false});
    }

    std::vector<std::vector<double>> task_scores(tasks.size());
    parallel_over(tasks.size(), [&](std::size_t i) {
        const auto& task = tasks[i];
        const auto probe = build_sample_tables_frozen(task.probe->rows, index);
        // Mean distance to every gallery subject, all measures in one pass
        // over the enrolled samples.
        std::vector<double> md(n_measures * gallery.size());
        for (std::size_t g = 0; g < gallery.size(); ++g) {
            const auto& entry = gallery[g];
            std::vector<double> sums(n_measures, 0.0);
            for (const auto& sample : entry.train) {
                const auto terms = compute_pair_terms(probe, sample, t);
                for (std::size_t m = 0; m < n_measures; ++m)
                    sums[m] += combined_from_terms(terms, specs[m]);
            }
            for (std::size_t m = 0; m < n_measures; ++m)
                md[m * gallery.size() + g] =
                    sums[m] / static_cast<double>(entry.train.size());
        }
        auto& scores = task_scores[i];
        scores.resize(n_measures * task.targets.size());
        for (std::size_t m = 0; m < n_measures; ++m) {
            const auto row = std::span<const double>(md).subspan(
                m * gallery.size(), gallery.size());
            std::size_t best = 0;
            for (std::size_t g = 1; g < gallery.size(); ++g)
                if (row[g] < row[best]) best = g;
            for (std::size_t k = 0; k < task.targets.size(); ++k) {
                const std::size_t g = task.targets[k];
                const bool nearness_ok =
                    best == g || row[g] < rescue_factor * row[best];
                const double m_self = gallery[g].mean_self[m];
                double k_min = std::numeric_limits<double>::infinity();
                if (nearness_ok && m_self > 0.0) k_min = row[g] / m_self;
                scores[m * task.targets.size() + k] =
                    std::clamp(1.0 - k_min / 3.0, 0.0, 1.0);
            }
        }
    });

    std::vector<TrialSet> trials(n_measures);
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const auto& task = tasks[i];
        for (std::size_t m = 0; m < n_measures; ++m)
            for (std::size_t k = 0; k < task.targets.size(); ++k)
                (task.genuine ? trials[m].genuine_scores
                              : trials[m].impostor_scores)
                    .push_back(task_scores[i][m * task.targets.size() + k]);
    }

    std::vector<GpTableRow> result;
    result.reserve(n_measures);
    for (std::size_t m = 0; m < n_measures; ++m) {
        const auto curve = sweep(trials[m], protocol.grid_step);
        const RocPoint* operating = nullptr;
        double best_gap = std::numeric_limits<double>::infinity();
        for (const auto& point : curve.points) {
            if (point.threshold > 1.0) continue;  // crossing helper only
            const double gap = std::abs(point.far - point.frr);
            if (gap < best_gap) {
                best_gap = gap;
                operating = &point;
            }
        }
        result.push_back({specs[m].name(), operating->far, operating->frr,
                          3.0 * (1.0 - operating->threshold)});
    }
    return result;
}

std::string summary_csv(std::span<const EvalReport> reports) {
    std::string out = "detector,dataset,subject_count,auc,eer\n";
    char buf[256];
    for (const auto& report : reports) {
        std::snprintf(buf, sizeof buf, "%s,%s,%zu,%.6f,%.6f\n",
                      report.detector.c_str(), report.dataset.c_str(),
                      report.subject_count, report.pooled.auc,
                      report.pooled.eer);
        out += buf;
    }
    return out;
}

std::string roc_csv(const RocCurve& curve) {
    std::string out = "threshold,far,frr\n";
    char buf[128];
    for (const auto& point : curve.points) {
        std::snprintf(buf, sizeof buf, "%.6g,%.6f,%.6f\n", point.threshold,
                      point.far, point.frr);
        out += buf;
    }
    return out;
}

}  // namespace ksdyn
