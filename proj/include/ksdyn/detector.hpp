#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ksdyn/gmm.hpp"
#include "ksdyn/gp.hpp"
#include "ksdyn/mahalanobis.hpp"
#include "ksdyn/types.hpp"

namespace ksdyn {

/// Uniform enroll/score surface over the three detectors. enroll and
/// finalize run single-threaded; scoring is const and thread-safe.
class Detector {
  public:
    virtual ~Detector() = default;
    virtual std::string name() const = 0;
    /// Rows per probe when the protocol does not override.
    virtual std::size_t default_block() const = 0;
    virtual void enroll(const std::string& subject,
                        std::span<const FeatureRow> train) = 0;
    /// Called once after all enrollments, before any scoring.
    virtual void finalize() {}
    /// Subjects that survived enrollment and finalize, sorted.
    virtual std::vector<std::string> active_subjects() const = 0;
    /// Subjects dropped during finalize, with the reason.
    virtual std::vector<std::pair<std::string, std::string>>
    finalize_failures() const {
        return {};
    }
    virtual double score(const std::string& claimed,
                         std::span<const FeatureRow> probe) const = 0;
    /// out[i] = score of targets[i] claiming the probe. Overridden where
    /// one probe can be scored against every target in one pass.
    virtual void score_many(std::span<const std::string> targets,
                            std::span<const FeatureRow> probe,
                            std::span<double> out) const;
};

enum class DetectorKind { Mahalanobis, Gmm, Gp };

std::string detector_kind_name(DetectorKind kind);
DetectorKind detector_kind_from_name(const std::string& name);

class MahalanobisDetector final : public Detector {
  public:
    std::string name() const override { return "mahalanobis"; }
    std::size_t default_block() const override { return 1; }
    void enroll(const std::string& subject,
                std::span<const FeatureRow> train) override;
    std::vector<std::string> active_subjects() const override;
    double score(const std::string& claimed,
                 std::span<const FeatureRow> probe) const override;

    std::map<std::string, MahalanobisModel>& models() { return models_; }
    const std::map<std::string, MahalanobisModel>& models() const {
        return models_;
    }

  private:
    std::map<std::string, MahalanobisModel> models_;
};

class GmmDetector final : public Detector {
  public:
    struct Options {
        std::size_t components = 2;
        std::uint64_t seed = 0;
        std::size_t min_rows_per_digraph = kMinRowsPerDigraph;
        bool skip_unseen = false;
        std::size_t block = 50;
    };

    GmmDetector() = default;
    explicit GmmDetector(Options options) : options_(options) {}

    std::string name() const override { return "gmm"; }
    std::size_t default_block() const override { return options_.block; }
    void enroll(const std::string& subject,
                std::span<const FeatureRow> train) override;
    std::vector<std::string> active_subjects() const override;
    double score(const std::string& claimed,
                 std::span<const FeatureRow> probe) const override;

    std::map<std::string, GmmUserModel>& models() { return models_; }
    const std::map<std::string, GmmUserModel>& models() const {
        return models_;
    }

  private:
    Options options_;
    std::map<std::string, GmmUserModel> models_;
};

class GpDetector final : public Detector {
  public:
    struct Options {
        MeasureSpec spec = MeasureSpec::parse("R23A23");
        double rescue_factor = 1.1;
        std::size_t block = kGpDefaultBlock;  // enrollment sample size
    };

    GpDetector() = default;
    explicit GpDetector(Options options) : options_(std::move(options)) {}

    std::string name() const override { return "gp"; }
    std::size_t default_block() const override { return options_.block; }
    void enroll(const std::string& subject,
                std::span<const FeatureRow> train) override;
    void finalize() override;
    std::vector<std::string> active_subjects() const override;
    std::vector<std::pair<std::string, std::string>> finalize_failures()
        const override {
        return finalize_failures_;
    }
    double score(const std::string& claimed,
                 std::span<const FeatureRow> probe) const override;
    void score_many(std::span<const std::string> targets,
                    std::span<const FeatureRow> probe,
                    std::span<double> out) const override;

    const std::vector<GpProfile>& gallery() const { return gallery_; }
    std::vector<GpProfile>& gallery() { return gallery_; }
    const KeyRankIndex& index() const { return index_; }
    KeyRankIndex& index() { return index_; }
    const Options& options() const { return options_; }
    /// Replaces enrollment with prebuilt profiles (store loading).
    void adopt(std::vector<GpProfile> gallery, KeyRankIndex index);

  private:
    Options options_;
    std::map<std::string, std::vector<FeatureRow>> pending_;
    std::vector<GpProfile> gallery_;
    KeyRankIndex index_;
    std::vector<std::pair<std::string, std::string>> finalize_failures_;
    bool finalized_ = false;
};

std::unique_ptr<Detector> make_detector(DetectorKind kind,
                                        std::uint64_t seed,
                                        std::size_t gmm_components = 2,
                                        const MeasureSpec& gp_spec =
                                            MeasureSpec::parse("R23A23"),
                                        std::size_t gp_block = kGpDefaultBlock);

}  // namespace ksdyn
