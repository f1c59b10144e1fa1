#include "ksdyn/mahalanobis.hpp"

#include <cmath>

#include "ksdyn/error.hpp"
#include "ksdyn/stats.hpp"

namespace ksdyn {

Eigen::Vector3d feature_vector(const FeatureRow& row) {
    return {row.hold, row.up_down, row.down_down};
}

MahalanobisModel fit_mahalanobis(std::span<const FeatureRow> rows) {
    if (rows.size() < 2)
        throw Error(ErrorCode::InsufficientData,
                    "mahalanobis fit needs at least 2 rows, got " +
                        std::to_string(rows.size()));
    Eigen::MatrixXd obs(static_cast<Eigen::Index>(rows.size()), 3);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (!rows[i].subject.empty() && rows[i].subject != rows[0].subject)
            throw Error(ErrorCode::InvalidArgument,
                        "fit expects rows of a single subject");
        obs.row(static_cast<Eigen::Index>(i)) =
            feature_vector(rows[i]).transpose();
        if (!obs.row(static_cast<Eigen::Index>(i)).allFinite())
            throw Error(ErrorCode::NonFiniteInput,
                        "non-finite feature in training rows");
    }

    MahalanobisModel model;
    model.subject = rows[0].subject;
    model.n_train = rows.size();
    model.mean = stats::sample_mean(obs);
    const Eigen::MatrixXd cov = stats::sample_covariance(obs);
    model.degenerate = cov.norm() == 0.0;
    model.s_pinv = stats::pseudo_inverse(cov);
    return model;
}

double distance2(const MahalanobisModel& model, const Eigen::Vector3d& x) {
    const Eigen::Vector3d d = x - model.mean;
    const double value = d.transpose() * model.s_pinv * d;
    return value < 0.0 ? 0.0 : value;
}

double score_row(const MahalanobisModel& model, const Eigen::Vector3d& x) {
    return 1.0 / (1.0 + distance2(model, x));
}

double score_row(const MahalanobisModel& model, const FeatureRow& row) {
    return score_row(model, feature_vector(row));
}

double score_block(const MahalanobisModel& model,
                   std::span<const FeatureRow> rows) {
    if (rows.empty()) throw Error(ErrorCode::EmptyProbe, "empty probe block");
    double sum = 0.0;
    for (const auto& row : rows) sum += distance2(model, feature_vector(row));
    return 1.0 / (1.0 + sum / static_cast<double>(rows.size()));
}

}  // namespace ksdyn
