#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ksdyn/types.hpp"

namespace ksdyn {

/// Univariate Gaussian mixture over hold time.
struct GmmParams {
    std::vector<double> weights;
    std::vector<double> means;      // seconds
    std::vector<double> variances;  // seconds^2, each >= kVarianceFloor
    // Requested component count exceeded what the sample size supports,
    // so the fit fell back to a single component.
    bool fell_back_to_single = false;
    // Total log-likelihood after each EM iteration; non-decreasing.
    std::vector<double> ll_trace;

    std::size_t components() const { return weights.size(); }
};

inline constexpr double kVarianceFloor = 1e-8;
inline constexpr double kEmTolerance = 1e-6;
inline constexpr int kEmMaxIterations = 200;
inline constexpr std::size_t kMinRowsPerDigraph = 10;

/// EM fit with k-means++-style seeding. Falls back to one component when
/// samples < 2M. Deterministic given (samples, m, seed).
GmmParams fit_em(std::span<const double> samples, std::size_t m,
                 std::uint64_t seed);

/// log sum_i w_i N(x; mean_i, var_i), log-sum-exp guarded.
double log_likelihood(const GmmParams& params, double x);

struct GmmUserModel {
    std::string subject;
    std::map<std::string, GmmParams> per_digraph;
    GmmParams background;  // over all the user's hold times
    // Logistic calibration of mean per-row log-likelihood: center is the
    // median, scale the IQR/1.349 of training per-row log-likelihoods.
    double calibration_center = 0.0;
    double calibration_scale = 1.0;
    std::size_t n_train = 0;
};

struct GmmFitOptions {
    std::size_t components = 2;
    std::uint64_t seed = 0;
    std::size_t min_rows_per_digraph = kMinRowsPerDigraph;
};

GmmUserModel fit_gmm_user(std::span<const FeatureRow> rows,
                          const GmmFitOptions& options);

/// Mean per-row log-likelihood of the probe, digraph model when fitted and
/// background otherwise, mapped through the stored logistic calibration.
double score_probe(const GmmUserModel& model, std::span<const FeatureRow> probe,
                   bool skip_unseen = false);

}  // namespace ksdyn
