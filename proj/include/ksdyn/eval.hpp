#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ksdyn/types.hpp"

namespace ksdyn {

struct TrialSet {
    std::vector<double> genuine_scores;   // each in [0,1]
    std::vector<double> impostor_scores;  // each in [0,1]
    std::string detector;
    std::string dataset;
    std::string protocol;
};

struct RocPoint {
    double threshold = 0.0;
    double far = 0.0;
    double frr = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;  // thresholds strictly increasing
    double eer = 1.0;
    double auc = 0.0;
};

/// Order-preserving prefix split at floor(split * n). Chronology is kept;
/// nothing is shuffled.
std::pair<std::span<const FeatureRow>, std::span<const FeatureRow>>
split_70_30(std::span<const FeatureRow> rows, double split = 0.7);

/// First `count` samples of every subject other than the target, in the
/// subjects' given order.
std::vector<Sample> impostor_probes(
    const std::map<std::string, std::vector<Sample>>& samples_by_subject,
    const std::string& target, std::size_t count = 5);

/// Accept iff score >= threshold (ties accept).
double far(const TrialSet& trials, double threshold);
double frr(const TrialSet& trials, double threshold);

/// FAR/FRR over the grid 0..1 in `step` increments plus one past-the-end
/// threshold so the curves always cross. EER is linearly interpolated at
/// the first crossing; AUC is the trapezoid over (FAR, 1-FRR).
RocCurve sweep(const TrialSet& trials, double step = 0.001);

class Detector;

struct EvalProtocol {
    double split = 0.7;
    std::size_t impostor_count = 5;
    std::size_t probe_block = 0;  // rows per probe; 0 = detector default
    std::size_t min_rows = 10;
    double grid_step = 0.001;
};

struct SubjectResult {
    std::string subject;
    TrialSet trials;
    RocCurve curve;
};

struct EvalReport {
    std::string detector;
    std::string dataset;
    std::string protocol;
    std::vector<SubjectResult> per_subject;
    TrialSet pooled_trials;
    RocCurve pooled;
    std::vector<std::pair<std::string, std::string>> failures;
    std::size_t subject_count = 0;  // subjects that evaluated
};

/// Fits the detector per subject on the train split, scores genuine test
/// probes and other subjects' impostor probes, and sweeps per-subject and
/// score-pooled curves. Per-subject failures are recorded, not fatal.
EvalReport evaluate(Detector& detector, const FeatureTable& table,
                    const EvalProtocol& protocol);

struct GpTableRow {
    std::string measure;
    double far = 0.0;  // fraction, not percent
    double frr = 0.0;
    double k = 0.0;  // self-threshold multiplier at the operating point
};

/// FAR/FRR for the nine standard measures at the grid point minimizing
/// |FAR - FRR|, using the same split and impostor protocol as evaluate.
std::vector<GpTableRow> gp_table(const FeatureTable& table,
                                 const EvalProtocol& protocol, double t,
                                 std::size_t block,
                                 double rescue_factor = 1.1);

/// header + one `detector,dataset,subject_count,auc,eer` row per report.
std::string summary_csv(std::span<const EvalReport> reports);

/// `threshold,far,frr` rows.
std::string roc_csv(const RocCurve& curve);

}  // namespace ksdyn
