#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace ksdyn::stats {

/// Column-wise arithmetic mean of observations (one row per observation).
Eigen::VectorXd sample_mean(const Eigen::MatrixXd& observations);

/// Sample covariance with the n-1 denominator.
Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& observations);

/// Moore-Penrose pseudo-inverse via SVD; singular values below
/// 1e-12 x the largest are treated as zero. The zero matrix maps to itself.
Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& matrix);

/// d' * form * d, clamped at zero to absorb round-off on PSD forms.
double quadratic_form(const Eigen::MatrixXd& form, const Eigen::VectorXd& d);

/// Linear-interpolation quantile of unsorted data, p in [0,1].
double quantile(std::vector<double> values, double p);

double median(std::vector<double> values);

/// Interquartile range (Q3 - Q1).
double interquartile_range(std::vector<double> values);

}  // namespace ksdyn::stats
