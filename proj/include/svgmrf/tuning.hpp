#pragma once

#include "svgmrf/covariance.hpp"
#include "svgmrf/estimator.hpp"
#include "svgmrf/pairs.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace svgmrf {

/// W_kl = 1 / (1 + ||Sigma_k - Sigma_l||_F), zero diagonal.
Eigen::MatrixXd estimate_weights(const std::vector<Eigen::MatrixXd>& covariances);

struct BicScore {
    double score = 0.0;
    bool valid = false;
    /// Nonzeros of each estimate in the upper triangle, diagonal included.
    std::vector<std::size_t> df;
    std::string reason;
};

/// Extended BIC:
///   sum_k n_k [tr(S_k T_k) - log det T_k] + log(n_k) df_k + 4 df_k log d.
/// An estimate that is not positive definite makes the score invalid.
BicScore bic_score(const PrecisionEstimate& estimate, const std::vector<Eigen::MatrixXd>& covariances,
                   const std::vector<Eigen::Index>& sample_counts);

/// Default grid: 8 log-spaced points over [1e-2, 1e2].
std::vector<double> log_grid(double lo, double hi, std::size_t points);

struct TuningGrid {
    std::vector<double> c1 = log_grid(1e-2, 1e2, 8);
    std::vector<double> c2 = log_grid(1e-2, 1e2, 8);
    std::vector<double> c3 = log_grid(1e-2, 1e2, 8);
};

enum class TuningParallelism { coordinates, triples };

struct TuningOptions {
    EstimatorOptions estimator;
    TuningParallelism parallelism = TuningParallelism::coordinates;
    /// Pair weights; estimated from the sample covariances when empty.
    Eigen::MatrixXd weights;
};

struct BicRow {
    double c1 = 0.0;
    double c2 = 0.0;
    double c3 = 0.0;
    double mu = 0.0;
    double gamma = 0.0;
    std::vector<double> nu;
    BicScore bic;
};

struct BicReport {
    std::vector<BicRow> rows;
    std::size_t selected = 0;
};

struct TuningResult {
    HyperParams params;
    BicReport report;
    Eigen::MatrixXd weights;
    PrecisionEstimate estimate;
};

/// Grid search over (c1, c2, c3) minimizing bic_score. Ties go to the larger
/// mu, then the larger gamma, then the larger nu. Rows are reported in
/// ascending grid order, so the outcome does not depend on input ordering.
/// Throws NoValidModel when no triple gives a valid score.
TuningResult tune_parameters(const ClusterDataset& data, int q, const TuningGrid& grid,
                             const TuningOptions& options = {});

}  // namespace svgmrf
