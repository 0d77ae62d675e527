#include "svgmrf/estimator.hpp"

#include "svgmrf/error.hpp"
#include "svgmrf/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace svgmrf {

HyperParams make_hyper_params(double c1, double c2, double c3, Eigen::Index dimension,
                              const std::vector<Eigen::Index>& sample_counts, int q) {
    if (sample_counts.empty()) {
        throw InvalidArgument("sample counts must not be empty");
    }
    if (!(c1 > 0.0) || !(c2 > 0.0)) {
        throw InvalidArgument("grid constants must be positive");
    }
    const Eigen::Index n_min = *std::min_element(sample_counts.begin(), sample_counts.end());
    const double rate = std::sqrt(std::log(static_cast<double>(dimension)) / static_cast<double>(n_min));
    HyperParams p;
    p.gamma = c1 * rate;
    p.mu = c2 * rate;
    p.q = q;
    p.c1 = c1;
    p.c2 = c2;
    p.c3 = c3;
    for (const Eigen::Index n : sample_counts) {
        p.nu.push_back(threshold_from_constant(c3, dimension, n));
    }
    return p;
}

PrecisionEstimate solve_svgmrf(const std::vector<BackwardMapping>& mappings, const WeightGraph& weights,
                               double mu, double gamma, const EstimatorOptions& options) {
    if (mappings.empty()) {
        throw InvalidArgument("at least one backward mapping is required");
    }
    const auto k_count = static_cast<Index>(mappings.size());
    if (weights.clusters() != k_count) {
        throw InvalidArgument("weight matrix size must equal the cluster count");
    }
    const Index d = mappings.front().matrix.rows();
    for (const auto& m : mappings) {
        if (m.matrix.rows() != d || m.matrix.cols() != d) {
            throw InvalidArgument("backward mappings must share one square dimension");
        }
    }
    if (!(mu >= 0.0) || !std::isfinite(mu)) {
        throw InvalidArgument("mu must be finite and nonnegative");
    }

    const auto start = std::chrono::steady_clock::now();
    const CoordinateSolver solver(weights, gamma, options.solver);
    const std::size_t coords = coordinate_count(d);

    // Coordinate t enumerates (i, j), i <= j, row by row.
    std::vector<Index> row_start(static_cast<std::size_t>(d) + 1, 0);
    for (Index i = 0; i < d; ++i) {
        row_start[static_cast<std::size_t>(i) + 1] = row_start[static_cast<std::size_t>(i)] + (d - i);
    }
    std::vector<double> values(coords * static_cast<std::size_t>(k_count), 0.0);
    std::vector<double> residuals(coords, 0.0);

    parallel_chunks(coords, options.workers, [&](std::size_t begin, std::size_t end) {
        auto row_it = std::upper_bound(row_start.begin(), row_start.end(), static_cast<Index>(begin)) - 1;
        Index i = static_cast<Index>(row_it - row_start.begin());
        Eigen::VectorXd f(k_count);
        for (std::size_t t = begin; t < end; ++t) {
            while (static_cast<Index>(t) >= row_start[static_cast<std::size_t>(i) + 1]) {
                ++i;
            }
            const Index j = i + (static_cast<Index>(t) - row_start[static_cast<std::size_t>(i)]);
            for (Index k = 0; k < k_count; ++k) {
                f(k) = mappings[static_cast<std::size_t>(k)].matrix(i, j);
            }
            const double coord_mu = (i == j && !options.penalize_diagonal) ? 0.0 : mu;
            const CoordinateSolution sol = solver.solve(f, coord_mu);
            if (!sol.converged) {
                throw SolverFailure(static_cast<std::size_t>(i), static_cast<std::size_t>(j),
                                    "KKT residual " + std::to_string(sol.kkt_residual) + " above tolerance after " +
                                        std::to_string(sol.sweeps) + " sweeps");
            }
            for (Index k = 0; k < k_count; ++k) {
                values[t * static_cast<std::size_t>(k_count) + static_cast<std::size_t>(k)] = sol.theta(k);
            }
            residuals[t] = sol.kkt_residual;
        }
    });

    PrecisionEstimate est;
    est.dimension = d;
    est.precision.reserve(static_cast<std::size_t>(k_count));
    for (Index k = 0; k < k_count; ++k) {
        std::vector<Eigen::Triplet<double>> triplets;
        std::size_t t = 0;
        for (Index i = 0; i < d; ++i) {
            for (Index j = i; j < d; ++j, ++t) {
                const double v = values[t * static_cast<std::size_t>(k_count) + static_cast<std::size_t>(k)];
                if (v != 0.0) {
                    triplets.emplace_back(i, j, v);
                    if (i != j) {
                        triplets.emplace_back(j, i, v);
                    }
                }
            }
        }
        Eigen::SparseMatrix<double> m(d, d);
        m.setFromTriplets(triplets.begin(), triplets.end());
        est.precision.push_back(std::move(m));
    }
    double sum = 0.0;
    for (const double r : residuals) {
        est.max_kkt = std::max(est.max_kkt, r);
        sum += r;
    }
    est.mean_kkt = coords > 0 ? sum / static_cast<double>(coords) : 0.0;
    est.kkt_residuals = std::move(residuals);
    est.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return est;
}

PrecisionEstimate solve_svgmrf(const ClusterDataset& data, const WeightGraph& weights, const HyperParams& params,
                               const EstimatorOptions& options) {
    if (params.q != weights.q()) {
        throw InvalidArgument("hyperparameter q does not match the weight graph");
    }
    const auto covs = sample_covariances(data, options.center);
    const auto mappings = backward_mappings(covs, params.nu, options.condition_cap, options.workers);
    return solve_svgmrf(mappings, weights, params.mu, params.gamma, options);
}

}  // namespace svgmrf
