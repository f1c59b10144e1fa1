#include "ksdyn/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ksdyn/error.hpp"

namespace ksdyn::stats {

Eigen::VectorXd sample_mean(const Eigen::MatrixXd& observations) {
    if (observations.rows() == 0)
        throw Error(ErrorCode::InsufficientData, "mean of empty sample");
    return observations.colwise().mean();
}

Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& observations) {
    const auto n = observations.rows();
    if (n < 2)
        throw Error(ErrorCode::InsufficientData,
                    "covariance needs at least 2 observations");
    Eigen::MatrixXd centered =
        observations.rowwise() - observations.colwise().mean();
    return (centered.transpose() * centered) / static_cast<double>(n - 1);
}

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& matrix) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(
        matrix, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cutoff = 1e-12 * (sv.size() > 0 ? sv(0) : 0.0);
    Eigen::VectorXd inv_sv = Eigen::VectorXd::Zero(sv.size());
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > cutoff && sv(i) > 0.0) inv_sv(i) = 1.0 / sv(i);
    return svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().transpose();
}

double quadratic_form(const Eigen::MatrixXd& form, const Eigen::VectorXd& d) {
    const double value = d.transpose() * form * d;
    return value < 0.0 ? 0.0 : value;
}

double quantile(std::vector<double> values, double p) {
    if (values.empty())
        throw Error(ErrorCode::InsufficientData, "quantile of empty sample");
    if (!(p >= 0.0 && p <= 1.0))
        throw Error(ErrorCode::InvalidArgument, "quantile p outside [0,1]");
    std::sort(values.begin(), values.end());
    const double pos = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

double median(std::vector<double> values) {
    return quantile(std::move(values), 0.5);
}

double interquartile_range(std::vector<double> values) {
    const double q1 = quantile(values, 0.25);
    const double q3 = quantile(std::move(values), 0.75);
    return q3 - q1;
}

}  // namespace ksdyn::stats
