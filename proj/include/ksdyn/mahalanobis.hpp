#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "ksdyn/types.hpp"

namespace ksdyn {

/// Per-user profile: mean of (H, UD, DD) plus the pseudo-inverse of the
/// training covariance. Immutable after fit; safe to score concurrently.
struct MahalanobisModel {
    std::string subject;
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    Eigen::Matrix3d s_pinv = Eigen::Matrix3d::Zero();
    std::size_t n_train = 0;
    // All training rows identical: covariance is zero and so is its
    // pseudo-inverse. Scoring still works (every probe scores 1).
    bool degenerate = false;
};

Eigen::Vector3d feature_vector(const FeatureRow& row);

MahalanobisModel fit_mahalanobis(std::span<const FeatureRow> rows);

/// (x - mean)' * s_pinv * (x - mean), clamped at zero.
double distance2(const MahalanobisModel& model, const Eigen::Vector3d& x);

/// 1 / (1 + distance2): strictly decreasing in distance, 1 at the mean.
double score_row(const MahalanobisModel& model, const Eigen::Vector3d& x);
double score_row(const MahalanobisModel& model, const FeatureRow& row);

/// Block mode: average distance2 over the rows, then squash. Averaging
/// before the squash keeps far-out rows influential.
double score_block(const MahalanobisModel& model,
                   std::span<const FeatureRow> rows);

}  // namespace ksdyn
