#pragma once

#include "svgmrf/pairs.hpp"

#include <Eigen/Dense>

#include <vector>

namespace svgmrf {

/// One coordinate (i, j) of the decomposed estimator:
///
///   min_theta ||theta - f||^2 + mu ||theta||_1 + gamma sum_{k<l} W_kl |theta_k - theta_l|^q
///
/// where theta and f have one entry per cluster.
struct CoordinateProblem {
    Eigen::VectorXd f;
    WeightGraph weights;
    double mu = 0.0;
    double gamma = 0.0;

    int q() const noexcept { return weights.q(); }
};

struct SolverOptions {
    /// Stopping tolerance on kkt_residual.
    double kkt_tolerance = 1e-9;
    /// q = 1 only: |theta_k| below this becomes 0, |theta_k - theta_l| below
    /// this is fused to the common mean.
    double snap_tolerance = 1e-8;
    int max_sweeps = 200000;
};

struct CoordinateSolution {
    Eigen::VectorXd theta;
    double kkt_residual = 0.0;
    /// Primal minus dual objective at the certificate built from theta.
    double duality_gap = 0.0;
    int sweeps = 0;
    bool converged = false;
};

double coordinate_objective(const CoordinateProblem& problem, const Eigen::VectorXd& theta);

/// Largest componentwise violation of the zero-subgradient condition.
///
/// Terms that are differentiable at theta (nonzero entries, unequal pairs)
/// contribute their gradient. For zero entries and, when q = 1, for tied
/// pairs the subgradient is chosen to minimize the Euclidean norm of the
/// stationarity vector; the reported value is the max-norm of that vector.
/// It is zero exactly when theta is optimal.
double kkt_residual(const CoordinateProblem& problem, const Eigen::VectorXd& theta);

/// Reusable solver for all coordinates sharing (W, q, gamma).
///
/// For q = 2 the factor C with C^T C = I + gamma A^T G^T G A is computed
/// once; each solve maps f to y = C^{-T} f and runs cyclic coordinate
/// descent on the Lasso ||y - C theta||^2 + mu ||theta||_1, finishing with
/// an exact solve on the detected support.
///
/// For q = 1 each solve runs coordinate ascent on the box-constrained dual
/// of the fused problem and polishes the primal by solving exactly on the
/// detected fused groups and zero set.
class CoordinateSolver {
public:
    CoordinateSolver(WeightGraph weights, double gamma, SolverOptions options = {});

    CoordinateSolution solve(const Eigen::VectorXd& f, double mu) const;

    const WeightGraph& weights() const noexcept { return weights_; }
    double gamma() const noexcept { return gamma_; }
    const SolverOptions& options() const noexcept { return options_; }
    /// Upper-triangular C (q = 2 only).
    const Eigen::MatrixXd& factor() const noexcept { return factor_; }

private:
    CoordinateSolution solve_q2(const Eigen::VectorXd& f, double mu) const;
    CoordinateSolution solve_q1(const Eigen::VectorXd& f, double mu) const;

    WeightGraph weights_;
    double gamma_;
    SolverOptions options_;
    Eigen::MatrixXd factor_;
    Eigen::MatrixXd gram_;
    struct FusedRow {
        Eigen::Index k;
        Eigen::Index l;
        double coef;
    };
    std::vector<FusedRow> fused_rows_;
};

CoordinateSolution solve_coordinate_q2(const CoordinateProblem& problem, const SolverOptions& options = {});
CoordinateSolution solve_coordinate_q1(const CoordinateProblem& problem, const SolverOptions& options = {});
CoordinateSolution solve_coordinate(const CoordinateProblem& problem, const SolverOptions& options = {});

/// Replaces |theta_k| <= tol by 0 and fuses entries within tol of each
/// other (single linkage on sorted values) to their mean.
Eigen::VectorXd snap_fused(const Eigen::VectorXd& theta, double tol);

}  // namespace svgmrf
