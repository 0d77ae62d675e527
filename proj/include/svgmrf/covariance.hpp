#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace svgmrf {

/// Per-cluster sample matrices; rows are observations, columns variables.
class ClusterDataset {
public:
    explicit ClusterDataset(std::vector<Eigen::MatrixXd> samples);

    std::size_t clusters() const noexcept { return samples_.size(); }
    Eigen::Index dimension() const noexcept { return samples_.front().cols(); }
    Eigen::Index sample_count(std::size_t k) const { return samples_.at(k).rows(); }
    std::vector<Eigen::Index> sample_counts() const;
    Eigen::Index min_sample_count() const;
    const Eigen::MatrixXd& samples(std::size_t k) const { return samples_.at(k); }

private:
    std::vector<Eigen::MatrixXd> samples_;
};

/// (1/n) sum_i x_i x_i^T. The model is zero-mean so no centering is done
/// unless `center` is set.
Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& samples, bool center = false);

std::vector<Eigen::MatrixXd> sample_covariances(const ClusterDataset& data, bool center = false);

/// Shrinks off-diagonal entries toward zero by nu, clipping at zero.
/// The diagonal is left untouched.
Eigen::MatrixXd soft_threshold(const Eigen::MatrixXd& m, double nu);

struct BackwardMapping {
    Eigen::MatrixXd matrix;
    double nu = 0.0;
};

inline constexpr double kDefaultConditionCap = 1e12;

/// Inverse of the soft-thresholded covariance.
///
/// Throws SingularBackwardMapping (carrying `cluster` and `nu`) when the
/// thresholded matrix has condition number above `condition_cap`.
BackwardMapping backward_mapping(const Eigen::MatrixXd& covariance, double nu, std::size_t cluster = 0,
                                 double condition_cap = kDefaultConditionCap);

std::vector<BackwardMapping> backward_mappings(const std::vector<Eigen::MatrixXd>& covariances,
                                               const std::vector<double>& nus,
                                               double condition_cap = kDefaultConditionCap,
                                               unsigned workers = 1);

/// nu_k = c3 * sqrt(log(d) / n_k), natural log. The dimension is taken as a
/// real number so the formula can be evaluated at any d >= 2.
double threshold_from_constant(double c3, double dimension, Eigen::Index samples);

/// Constants of the bounded-norm and weak-sparsity assumptions, measured on
/// a known precision matrix. They never enter the estimator.
struct TruthConstants {
    double precision_inf_norm = 0.0;   // ||Theta*||_inf (max absolute row sum)
    double covariance_lower = 0.0;     // inf_{||w||_inf = 1} ||Sigma* w||_inf = 1 / ||Theta*||_inf
    double covariance_max = 0.0;       // ||Sigma*||_max
    double weak_sparsity = 0.0;        // max_i sum_j |Sigma*_ij|^p
};

TruthConstants truth_constants(const Eigen::MatrixXd& precision, double p);

/// Smoothness D and difference-sparsity D0 of a family of true precision
/// matrices: the maximum over (i,j) of sqrt(sum_{k<l} (T_k;ij - T_l;ij)^2)
/// and of the count of pairs with T_k;ij != T_l;ij.
struct ChangeConstants {
    double smoothness = 0.0;
    std::size_t difference_sparsity = 0;
};

ChangeConstants change_constants(const std::vector<Eigen::MatrixXd>& precisions);

}  // namespace svgmrf
