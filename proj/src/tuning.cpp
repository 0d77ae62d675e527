#include "svgmrf/tuning.hpp"

#include "svgmrf/error.hpp"
#include "svgmrf/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>

namespace svgmrf {

Eigen::MatrixXd estimate_weights(const std::vector<Eigen::MatrixXd>& covariances) {
    if (covariances.size() < 2) {
        throw InvalidArgument("weight estimation needs at least two clusters");
    }
    const Eigen::Index d = covariances.front().rows();
    for (const auto& c : covariances) {
        if (c.rows() != d || c.cols() != d) {
            throw InvalidArgument("covariances must share one square dimension");
        }
    }
    const auto k_count = static_cast<Eigen::Index>(covariances.size());
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(k_count, k_count);
    for (Eigen::Index k = 0; k < k_count; ++k) {
        for (Eigen::Index l = k + 1; l < k_count; ++l) {
            const double dist =
                (covariances[static_cast<std::size_t>(k)] - covariances[static_cast<std::size_t>(l)]).norm();
            w(k, l) = w(l, k) = 1.0 / (1.0 + dist);
        }
    }
    return w;
}

BicScore bic_score(const PrecisionEstimate& estimate, const std::vector<Eigen::MatrixXd>& covariances,
                   const std::vector<Eigen::Index>& sample_counts) {
    const std::size_t k_count = estimate.clusters();
    if (covariances.size() != k_count || sample_counts.size() != k_count) {
        throw InvalidArgument("estimate, covariances and sample counts disagree on the cluster count");
    }
    const Eigen::Index d = estimate.dimension;
    const double log_d = std::log(static_cast<double>(d));
    BicScore out;
    out.valid = true;
    out.df.assign(k_count, 0);
    double total = 0.0;
    for (std::size_t k = 0; k < k_count; ++k) {
        const Eigen::MatrixXd theta = estimate.dense(k);
        const auto& cov = covariances[k];
        if (cov.rows() != d || cov.cols() != d || theta.rows() != d) {
            throw InvalidArgument("covariance dimension does not match the estimate");
        }
        std::size_t df = 0;
        for (Eigen::Index j = 0; j < d; ++j) {
            for (Eigen::Index i = 0; i <= j; ++i) {
                df += theta(i, j) != 0.0 ? 1 : 0;
            }
        }
        out.df[k] = df;
        Eigen::LLT<Eigen::MatrixXd> llt(theta);
        if (llt.info() != Eigen::Success) {
            out.valid = false;
            if (out.reason.empty()) {
                out.reason = "estimate of cluster " + std::to_string(k) + " is not positive definite";
            }
            continue;
        }
        const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
        if (!std::isfinite(log_det)) {
            out.valid = false;
            if (out.reason.empty()) {
                out.reason = "estimate of cluster " + std::to_string(k) + " has a non-finite log-determinant";
            }
            continue;
        }
        const double n = static_cast<double>(sample_counts[k]);
        const double trace = cov.cwiseProduct(theta).sum();
        total += n * (trace - log_det) + std::log(n) * static_cast<double>(df) + 4.0 * static_cast<double>(df) * log_d;
    }
    out.score = out.valid ? total : std::numeric_limits<double>::infinity();
    return out;
}

std::vector<double> log_grid(double lo, double hi, std::size_t points) {
    if (!(lo > 0.0) || !(hi >= lo) || points == 0) {
        throw InvalidArgument("log grid needs 0 < lo <= hi and at least one point");
    }
    std::vector<double> out(points);
    if (points == 1) {
        out[0] = lo;
        return out;
    }
    const double a = std::log(lo);
    const double b = std::log(hi);
    for (std::size_t i = 0; i < points; ++i) {
        out[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1));
    }
    out.front() = lo;
    out.back() = hi;
    return out;
}

namespace {

std::vector<double> canonical(std::vector<double> values, const char* name) {
    if (values.empty()) {
        throw InvalidArgument(std::string("grid for ") + name + " is empty");
    }
    for (const double v : values) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw InvalidArgument(std::string("grid for ") + name + " must contain positive values");
        }
    }
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    return values;
}

}  // namespace

TuningResult tune_parameters(const ClusterDataset& data, int q, const TuningGrid& grid, const TuningOptions& options) {
    const auto c1s = canonical(grid.c1, "c1");
    const auto c2s = canonical(grid.c2, "c2");
    const auto c3s = canonical(grid.c3, "c3");
    const auto counts = data.sample_counts();
    const Eigen::Index d = data.dimension();
    const auto covs = sample_covariances(data, options.estimator.center);

    TuningResult result;
    if (options.weights.size() > 0) {
        result.weights = options.weights;
    } else if (data.clusters() >= 2) {
        result.weights = estimate_weights(covs);
    } else {
        result.weights = Eigen::MatrixXd::Zero(1, 1);
    }
    const WeightGraph graph(result.weights, q);

    auto& rows = result.report.rows;
    for (const double c3 : c3s) {
        for (const double c1 : c1s) {
            for (const double c2 : c2s) {
                BicRow row;
                const HyperParams p = make_hyper_params(c1, c2, c3, d, counts, q);
                row.c1 = c1;
                row.c2 = c2;
                row.c3 = c3;
                row.mu = p.mu;
                row.gamma = p.gamma;
                row.nu = p.nu;
                rows.push_back(std::move(row));
            }
        }
    }

    const std::size_t per_c3 = c1s.size() * c2s.size();
    for (std::size_t a = 0; a < c3s.size(); ++a) {
        std::vector<BackwardMapping> mappings;
        try {
            mappings = backward_mappings(covs, rows[a * per_c3].nu, options.estimator.condition_cap,
                                         options.estimator.workers);
        } catch (const SingularBackwardMapping& e) {
            for (std::size_t b = 0; b < per_c3; ++b) {
                auto& bic = rows[a * per_c3 + b].bic;
                bic.valid = false;
                bic.score = std::numeric_limits<double>::infinity();
                bic.reason = e.what();
            }
            continue;
        }
        auto evaluate = [&](std::size_t b, unsigned inner_workers) {
            BicRow& row = rows[a * per_c3 + b];
            EstimatorOptions eo = options.estimator;
            eo.workers = inner_workers;
            try {
                const PrecisionEstimate est = solve_svgmrf(mappings, graph, row.mu, row.gamma, eo);
                row.bic = bic_score(est, covs, counts);
            } catch (const SolverFailure& e) {
                row.bic.valid = false;
                row.bic.score = std::numeric_limits<double>::infinity();
                row.bic.reason = e.what();
            }
        };
        if (options.parallelism == TuningParallelism::triples) {
            parallel_for(per_c3, options.estimator.workers, [&](std::size_t b) { evaluate(b, 1); });
        } else {
            for (std::size_t b = 0; b < per_c3; ++b) {
                evaluate(b, options.estimator.workers);
            }
        }
    }

    std::optional<std::size_t> best;
    auto key = [&](const BicRow& r) { return std::make_tuple(r.bic.score, -r.mu, -r.gamma, -r.c3); };
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (!rows[r].bic.valid) {
            continue;
        }
        if (!best || key(rows[r]) < key(rows[*best])) {
            best = r;
        }
    }
    if (!best) {
        std::ostringstream msg;
        msg << "no valid model on the tuning grid:";
        for (const auto& r : rows) {
            msg << "\n  c1=" << r.c1 << " c2=" << r.c2 << " c3=" << r.c3 << ": " << r.bic.reason;
        }
        throw NoValidModel(msg.str());
    }
    result.report.selected = *best;
    const BicRow& chosen = rows[*best];
    result.params = make_hyper_params(chosen.c1, chosen.c2, chosen.c3, d, counts, q);
    const auto mappings = backward_mappings(covs, result.params.nu, options.estimator.condition_cap,
                                            options.estimator.workers);
    result.estimate = solve_svgmrf(mappings, graph, result.params.mu, result.params.gamma, options.estimator);
    return result;
}

}  // namespace svgmrf
