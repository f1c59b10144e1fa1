#include "ksdyn/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "ksdyn/error.hpp"
#include "ksdyn/stats.hpp"
#include "ksdyn/util.hpp"

namespace ksdyn {

namespace {

// Hand-rolled draws so fits are reproducible across standard libraries;
// std:: distributions are implementation-defined.
std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
    return static_cast<std::size_t>(rng() % n);
}

double uniform_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double log_normal_pdf(double x, double mean, double variance) {
    const double d = x - mean;
    return -0.5 * std::log(2.0 * std::numbers::pi * variance) -
           d * d / (2.0 * variance);
}

// k-means++ seeding: spread initial means, share the global variance.
GmmParams initial_params(std::span<const double> samples, std::size_t m,
                         std::mt19937_64& rng) {
    std::vector<double> centers;
    centers.push_back(samples[uniform_index(rng, samples.size())]);
    std::vector<double> dist2(samples.size());
    while (centers.size() < m) {
        double total = 0.0;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (double c : centers) {
                const double d = samples[i] - c;
                best = std::min(best, d * d);
            }
            dist2[i] = best;
            total += best;
        }
        if (total <= 0.0) {
            centers.push_back(samples[uniform_index(rng, samples.size())]);
            continue;
        }
        double target = uniform_unit(rng) * total;
        std::size_t pick = samples.size() - 1;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            target -= dist2[i];
            if (target <= 0.0) {
                pick = i;
                break;
            }
        }
        centers.push_back(samples[pick]);
    }
    std::sort(centers.begin(), centers.end());

    double mean = 0.0;
    for (double x : samples) mean += x;
    mean /= static_cast<double>(samples.size());
    double var = 0.0;
    for (double x : samples) var += (x - mean) * (x - mean);
    var = std::max(var / static_cast<double>(samples.size()), kVarianceFloor);

    GmmParams params;
    params.weights.assign(m, 1.0 / static_cast<double>(m));
    params.means = std::move(centers);
    params.variances.assign(m, var);
    return params;
}

}  // namespace

GmmParams fit_em(std::span<const double> samples, std::size_t m,
                 std::uint64_t seed) {
    if (m == 0)
        throw Error(ErrorCode::InvalidArgument, "component count must be >= 1");
    if (samples.size() < 2)
        throw Error(ErrorCode::InsufficientData,
                    "EM fit needs at least 2 samples, got " +
                        std::to_string(samples.size()));
    for (double x : samples)
        if (!std::isfinite(x))
            throw Error(ErrorCode::NonFiniteInput, "non-finite sample");

    bool fell_back = false;
    if (samples.size() < 2 * m) {
        m = 1;
        fell_back = true;
    }

    std::mt19937_64 rng(seed);
    GmmParams params = initial_params(samples, m, rng);
    params.fell_back_to_single = fell_back;

    const auto n = samples.size();
    std::vector<double> resp(n * m);
    std::vector<double> log_terms(m);
    double prev_ll = -std::numeric_limits<double>::infinity();

    for (int iter = 0; iter < kEmMaxIterations; ++iter) {
        // E-step in log space; the per-sample normalizer is the sample's
        // log-likelihood, so the total falls out of the same pass.
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double max_term = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < m; ++j) {
                log_terms[j] =
                    params.weights[j] > 0.0
                        ? std::log(params.weights[j]) +
                              log_normal_pdf(samples[i], params.means[j],
                                             params.variances[j])
                        : -std::numeric_limits<double>::infinity();
                max_term = std::max(max_term, log_terms[j]);
            }
            double sum = 0.0;
            for (std::size_t j = 0; j < m; ++j)
                sum += std::exp(log_terms[j] - max_term);
            const double log_px = max_term + std::log(sum);
            ll += log_px;
            for (std::size_t j = 0; j < m; ++j)
                resp[i * m + j] = std::exp(log_terms[j] - log_px);
        }
        params.ll_trace.push_back(ll);
        if (iter > 0 && ll - prev_ll < kEmTolerance) break;
        prev_ll = ll;

        for (std::size_t j = 0; j < m; ++j) {
            double nj = 0.0, sx = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                nj += resp[i * m + j];
                sx += resp[i * m + j] * samples[i];
            }
            params.weights[j] = nj / static_cast<double>(n);
            if (nj < 1e-12) continue;  // starved component keeps its shape
            const double mu = sx / nj;
            double sv = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = samples[i] - mu;
                sv += resp[i * m + j] * d * d;
            }
            params.means[j] = mu;
            params.variances[j] = std::max(sv / nj, kVarianceFloor);
        }
        double wsum = 0.0;
        for (double w : params.weights) wsum += w;
        for (double& w : params.weights) w /= wsum;
    }
    return params;
}

double log_likelihood(const GmmParams& params, double x) {
    double max_term = -std::numeric_limits<double>::infinity();
    std::vector<double> log_terms(params.components());
    for (std::size_t j = 0; j < params.components(); ++j) {
        log_terms[j] = params.weights[j] > 0.0
                           ? std::log(params.weights[j]) +
                                 log_normal_pdf(x, params.means[j],
                                                params.variances[j])
                           : -std::numeric_limits<double>::infinity();
        max_term = std::max(max_term, log_terms[j]);
    }
    double sum = 0.0;
    for (double term : log_terms) sum += std::exp(term - max_term);
    return max_term + std::log(sum);
}

namespace {

const GmmParams& params_for_row(const GmmUserModel& model,
                                const std::string& digraph) {
    const auto it = model.per_digraph.find(digraph);
    return it != model.per_digraph.end() ? it->second : model.background;
}

}  // namespace

GmmUserModel fit_gmm_user(std::span<const FeatureRow> rows,
                          const GmmFitOptions& options) {
    if (rows.size() < 2)
        throw Error(ErrorCode::InsufficientData,
                    "GMM user fit needs at least 2 rows, got " +
                        std::to_string(rows.size()));

    GmmUserModel model;
    model.subject = rows[0].subject;
    model.n_train = rows.size();

    std::map<std::string, std::vector<double>> holds_by_digraph;
    std::vector<double> all_holds;
    all_holds.reserve(rows.size());
    for (const auto& row : rows) {
        holds_by_digraph[row.key].push_back(row.hold);
        all_holds.push_back(row.hold);
    }

    model.background = fit_em(all_holds, options.components,
                              options.seed ^ fnv1a64("\x01" "background"));

    for (const auto& [digraph, holds] : holds_by_digraph) {
        if (holds.size() < options.min_rows_per_digraph) continue;
        model.per_digraph.emplace(
            digraph, fit_em(holds, options.components,
                            options.seed ^ fnv1a64(digraph)));
    }
    if (model.per_digraph.empty()) {
        // No digraph reached the minimum; model the most frequent one anyway
        // so the per-digraph table is never empty. Ties pick the
        // lexicographically smallest label.
        std::string best;
        std::size_t best_count = 0;
        for (const auto& [digraph, holds] : holds_by_digraph) {
            if (holds.size() > best_count) {
                best = digraph;
                best_count = holds.size();
            }
        }
        const auto& holds = holds_by_digraph.at(best);
        if (holds.size() >= 2) {
            model.per_digraph.emplace(
                best, fit_em(holds, options.components,
                             options.seed ^ fnv1a64(best)));
        } else {
            model.per_digraph.emplace(best, model.background);
        }
    }

    std::vector<double> train_lls;
    train_lls.reserve(rows.size());
    for (const auto& row : rows)
        train_lls.push_back(
            log_likelihood(params_for_row(model, row.key), row.hold));
    model.calibration_center = stats::median(train_lls);
    model.calibration_scale =
        std::max(stats::interquartile_range(train_lls) / 1.349, 1e-6);
    return model;
}

double score_probe(const GmmUserModel& model, std::span<const FeatureRow> probe,
                   bool skip_unseen) {
    if (probe.empty()) throw Error(ErrorCode::EmptyProbe, "empty probe");
    double sum = 0.0;
    std::size_t used = 0;
    for (const auto& row : probe) {
        const auto it = model.per_digraph.find(row.key);
        if (it == model.per_digraph.end()) {
            if (skip_unseen) continue;
            sum += log_likelihood(model.background, row.hold);
        } else {
            sum += log_likelihood(it->second, row.hold);
        }
        ++used;
    }
    if (used == 0) {  // every digraph unseen: fall back to background scoring
        for (const auto& row : probe)
            sum += log_likelihood(model.background, row.hold);
        used = probe.size();
    }
    const double mean_ll = sum / static_cast<double>(used);
    const double z =
        -(mean_ll - model.calibration_center) / model.calibration_scale;
    return 1.0 / (1.0 + std::exp(z));
}

}  // namespace ksdyn
