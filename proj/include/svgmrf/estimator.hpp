#pragma once

#include "svgmrf/coordinate.hpp"
#include "svgmrf/covariance.hpp"
#include "svgmrf/pairs.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <optional>
#include <vector>

namespace svgmrf {

/// Penalties of one estimator run. The grid constants are kept when the
/// values were derived from them.
struct HyperParams {
    double mu = 0.0;
    double gamma = 0.0;
    std::vector<double> nu;
    int q = 2;
    std::optional<double> c1;
    std::optional<double> c2;
    std::optional<double> c3;
};

/// gamma = c1 sqrt(log d / n_min), mu = c2 sqrt(log d / n_min),
/// nu_k = c3 sqrt(log d / n_k).
HyperParams make_hyper_params(double c1, double c2, double c3, Eigen::Index dimension,
                              const std::vector<Eigen::Index>& sample_counts, int q);

struct EstimatorOptions {
    unsigned workers = 1;
    SolverOptions solver;
    /// When false the diagonal coordinates are solved with mu = 0.
    bool penalize_diagonal = true;
    bool center = false;
    double condition_cap = kDefaultConditionCap;
};

struct PrecisionEstimate {
    Eigen::Index dimension = 0;
    std::vector<Eigen::SparseMatrix<double>> precision;
    /// One KKT residual per coordinate i <= j, in row-major upper order.
    std::vector<double> kkt_residuals;
    double max_kkt = 0.0;
    double mean_kkt = 0.0;
    double solve_seconds = 0.0;

    std::size_t clusters() const noexcept { return precision.size(); }
    Eigen::MatrixXd dense(std::size_t k) const { return Eigen::MatrixXd(precision.at(k)); }
};

/// Number of coordinates with i <= j.
inline std::size_t coordinate_count(Eigen::Index d) {
    return static_cast<std::size_t>(d) * static_cast<std::size_t>(d + 1) / 2;
}

/// Solves every coordinate (i, j), i <= j, independently and writes the
/// result into (i, j) and (j, i) of each cluster's estimate. The output
/// does not depend on options.workers.
PrecisionEstimate solve_svgmrf(const std::vector<BackwardMapping>& mappings, const WeightGraph& weights,
                               double mu, double gamma, const EstimatorOptions& options = {});

/// Full pipeline from samples: covariances, backward mappings with params.nu,
/// then the coordinate solves.
PrecisionEstimate solve_svgmrf(const ClusterDataset& data, const WeightGraph& weights, const HyperParams& params,
                               const EstimatorOptions& options = {});

}  // namespace svgmrf
