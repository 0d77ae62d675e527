#pragma once

#include "svgmrf/estimator.hpp"
#include "svgmrf/pairs.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace svgmrf {

/// Edge recovery counts. Ratios with a zero denominator are left empty
/// rather than reported as 0.
struct SupportMetrics {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
    /// Cluster index, or empty for counts pooled over all clusters.
    std::optional<std::size_t> cluster;

    static SupportMetrics from_counts(std::size_t tp, std::size_t fp, std::size_t fn,
                                      std::optional<std::size_t> cluster = std::nullopt);
};

/// Compares supports on the strict upper triangle. An entry is in the
/// support when it is exactly nonzero.
SupportMetrics edge_metrics(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& truth);

/// One row per cluster, or a single pooled row (counts summed before the
/// ratios are formed) when `pooled` is set.
std::vector<SupportMetrics> support_metrics(const std::vector<Eigen::MatrixXd>& estimate,
                                            const std::vector<Eigen::MatrixXd>& truth, bool pooled);
std::vector<SupportMetrics> support_metrics(const PrecisionEstimate& estimate,
                                            const std::vector<Eigen::MatrixXd>& truth, bool pooled);

/// Recovery of the entries that change between clusters k and l. A
/// coordinate i <= j is a difference when the two values are not equal.
SupportMetrics difference_metrics(const std::vector<Eigen::MatrixXd>& estimate,
                                  const std::vector<Eigen::MatrixXd>& truth, std::size_t k, std::size_t l);

/// Same, summed over every cluster pair k < l.
SupportMetrics difference_metrics(const std::vector<Eigen::MatrixXd>& estimate,
                                  const std::vector<Eigen::MatrixXd>& truth);

struct EstimationErrors {
    /// ||estimate_k - truth_k||_max per cluster.
    std::vector<double> max_norm;
    /// Over coordinates i <= j: ||theta_hat_ij - theta*_ij||_2 across clusters.
    double coordinate_l2_max = 0.0;
    double coordinate_l2_mean = 0.0;
};

EstimationErrors estimation_errors(const std::vector<Eigen::MatrixXd>& estimate,
                                   const std::vector<Eigen::MatrixXd>& truth);

/// Moore-Penrose inverse by SVD; singular values below rel_cutoff * sigma_max
/// count as zero.
Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& m, double rel_cutoff = 1e-10);

struct IcDiagnostics {
    /// [(gamma/mu) G A; I].
    Eigen::MatrixXd B;
    /// Rows of B with (B theta*)_r != 0, ascending.
    std::vector<Index> support;
    /// || B_{S^c} B_S^+ sign((B theta*)_S) ||_inf
    double lhs = 0.0;
    double alpha_hat = 1.0;
    double kappa_ic = 1.0;
    bool ic_holds = true;
};

/// Irrepresentability diagnostics for one coordinate's true vector.
/// Requires mu > 0.
IcDiagnostics check_irrepresentability(const Eigen::VectorXd& theta, const WeightGraph& weights, double mu,
                                       double gamma, double tol = 1e-9);

struct IncoherenceResult {
    double value = 0.0;
    bool holds_at_half = true;
};

/// max over j outside S of ||(M_SS)^{-1} M_Sj||_1 with M = I + gamma L,
/// L the weighted Laplacian (q = 2).
IncoherenceResult check_mutual_incoherence(const WeightGraph& weights, double gamma, const std::vector<Index>& support);

struct SweepReport {
    std::size_t cases = 0;
    std::size_t failures = 0;
    /// Worst observed value of the checked quantity (kappa_IC, or the
    /// incoherence value) and the smallest alpha_hat - mu/gamma margin.
    double worst_value = 0.0;
    double worst_margin = 0.0;
    std::string first_failure;

    bool passed() const noexcept { return failures == 0; }
};

/// Exhaustive irrepresentability sweep with unit uniform weights: every
/// nonzero theta in {0,1,2}^K and {-1,0,1}^K for K = 2..max_k, at each
/// gamma/mu ratio. A case passes when IC holds, alpha_hat >= mu/gamma - tol
/// and kappa_IC lies in [1 - tol, 5 + tol].
SweepReport irrepresentability_sweep(Index max_k, const std::vector<double>& ratios, double tol = 1e-9);

/// Mutual incoherence over all supports for K = 2..max_k with unit uniform
/// weights and gamma = f / (2K) for each fraction f in (0, 1). A case passes
/// when the value is at most 1/2 + tol.
SweepReport incoherence_sweep(Index max_k, const std::vector<double>& fractions, double tol = 1e-9);

}  // namespace svgmrf
