#include "ksdyn/detector.hpp"

#include <algorithm>
#include <limits>
#include <set>

#include "ksdyn/error.hpp"
#include "ksdyn/util.hpp"

namespace ksdyn {

void Detector::score_many(std::span<const std::string> targets,
                          std::span<const FeatureRow> probe,
                          std::span<double> out) const {
    for (std::size_t i = 0; i < targets.size(); ++i)
        out[i] = score(targets[i], probe);
}

std::string detector_kind_name(DetectorKind kind) {
    switch (kind) {
        case DetectorKind::Mahalanobis: return "mahalanobis";
        case DetectorKind::Gmm: return "gmm";
        case DetectorKind::Gp: return "gp";
    }
    return "unknown";
}

DetectorKind detector_kind_from_name(const std::string& name) {
    if (name == "mahalanobis") return DetectorKind::Mahalanobis;
    if (name == "gmm") return DetectorKind::Gmm;
    if (name == "gp") return DetectorKind::Gp;
    throw Error(ErrorCode::InvalidArgument, "unknown detector: " + name);
}

void MahalanobisDetector::enroll(const std::string& subject,
                                 std::span<const FeatureRow> train) {
    models_[subject] = fit_mahalanobis(train);
    models_[subject].subject = subject;
}

std::vector<std::string> MahalanobisDetector::active_subjects() const {
    std::vector<std::string> subjects;
    for (const auto& [subject, model] : models_) subjects.push_back(subject);
    return subjects;
}

double MahalanobisDetector::score(const std::string& claimed,
                                  std::span<const FeatureRow> probe) const {
    const auto it = models_.find(claimed);
    if (it == models_.end())
        throw Error(ErrorCode::UnknownSubject, "not enrolled: " + claimed);
    return score_block(it->second, probe);
}

void GmmDetector::enroll(const std::string& subject,
                         std::span<const FeatureRow> train) {
    GmmFitOptions fit;
    fit.components = options_.components;
    // Per-subject seed so enrollment order cannot change any fit.
    fit.seed = options_.seed ^ fnv1a64(subject);
    fit.min_rows_per_digraph = options_.min_rows_per_digraph;
    models_[subject] = fit_gmm_user(train, fit);
    models_[subject].subject = subject;
}

std::vector<std::string> GmmDetector::active_subjects() const {
    std::vector<std::string> subjects;
    for (const auto& [subject, model] : models_) subjects.push_back(subject);
    return subjects;
}

double GmmDetector::score(const std::string& claimed,
                          std::span<const FeatureRow> probe) const {
    const auto it = models_.find(claimed);
    if (it == models_.end())
        throw Error(ErrorCode::UnknownSubject, "not enrolled: " + claimed);
    return score_probe(it->second, probe, options_.skip_unseen);
}

void GpDetector::enroll(const std::string& subject,
                        std::span<const FeatureRow> train) {
    if (finalized_)
        throw Error(ErrorCode::InvalidArgument,
                    "enroll after finalize is not supported");
    auto& rows = pending_[subject];
    rows.insert(rows.end(), train.begin(), train.end());
}

void GpDetector::finalize() {
    if (finalized_) return;
    std::set<std::string> labels;
    for (const auto& [subject, rows] : pending_) {
        for (const auto& row : rows) {
            const auto [first, second] = split_digraph_label(row.key);
            labels.insert(first);
            labels.insert(second);
        }
    }
    index_ = KeyRankIndex({labels.begin(), labels.end()});

    const MeasureSpec specs[] = {options_.spec};
    for (const auto& [subject, rows] : pending_) {
        try {
            const auto samples =
                segment_samples(subject, rows, options_.block);
            gallery_.push_back(
                build_gp_profile(subject, samples, specs, index_));
        } catch (const Error& error) {
            finalize_failures_.emplace_back(subject, error.what());
        }
    }
    pending_.clear();
    finalized_ = true;
}

std::vector<std::string> GpDetector::active_subjects() const {
    std::vector<std::string> subjects;
    for (const auto& profile : gallery_) subjects.push_back(profile.subject);
    std::sort(subjects.begin(), subjects.end());
    return subjects;
}

void GpDetector::adopt(std::vector<GpProfile> gallery, KeyRankIndex index) {
    gallery_ = std::move(gallery);
    index_ = std::move(index);
    pending_.clear();
    finalized_ = true;
}

double GpDetector::score(const std::string& claimed,
                         std::span<const FeatureRow> probe) const {
    const auto tables = build_sample_tables_frozen(probe, index_);
    return gp_trial_score(tables, claimed, gallery_, options_.spec,
                          options_.rescue_factor);
}

void GpDetector::score_many(std::span<const std::string> targets,
                            std::span<const FeatureRow> probe,
                            std::span<double> out) const {
    const auto tables = build_sample_tables_frozen(probe, index_);
    // One distance pass over the gallery covers every claimed target.
    std::vector<double> md(gallery_.size());
    std::size_t best = gallery_.size();
    for (std::size_t i = 0; i < gallery_.size(); ++i) {
        md[i] = mean_distance(tables, gallery_[i], options_.spec);
        if (best == gallery_.size() || md[i] < md[best] ||
            (md[i] == md[best] &&
             gallery_[i].subject < gallery_[best].subject))
            best = i;
    }
    if (best == gallery_.size())
        throw Error(ErrorCode::EmptyGallery, "no enrolled users");

    for (std::size_t t = 0; t < targets.size(); ++t) {
        std::size_t claimed = gallery_.size();
        for (std::size_t i = 0; i < gallery_.size(); ++i)
            if (gallery_[i].subject == targets[t]) claimed = i;
        if (claimed == gallery_.size())
            throw Error(ErrorCode::UnknownSubject,
                        "unknown subject: " + targets[t]);
        const double m_self =
            profile_self_distance(gallery_[claimed], options_.spec);
        const bool nearness_ok =
            claimed == best ||
            md[claimed] < options_.rescue_factor * md[best];
        double k_min = std::numeric_limits<double>::infinity();
        if (nearness_ok && m_self > 0.0) k_min = md[claimed] / m_self;
        out[t] = std::clamp(1.0 - k_min / 3.0, 0.0, 1.0);
    }
}

std::unique_ptr<Detector> make_detector(DetectorKind kind, std::uint64_t seed,
                                        std::size_t gmm_components,
                                        const MeasureSpec& gp_spec,
                                        std::size_t gp_block) {
    switch (kind) {
        case DetectorKind::Mahalanobis:
            return std::make_unique<MahalanobisDetector>();
        case DetectorKind::Gmm: {
            GmmDetector::Options options;
            options.seed = seed;
            options.components = gmm_components;
            return std::make_unique<GmmDetector>(options);
        }
        case DetectorKind::Gp: {
            GpDetector::Options options;
            options.spec = gp_spec;
            options.block = gp_block;
            return std::make_unique<GpDetector>(std::move(options));
        }
    }
    throw Error(ErrorCode::InvalidArgument, "unknown detector kind");
}

}  // namespace ksdyn
