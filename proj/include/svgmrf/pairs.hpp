#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <utility>
#include <vector>

namespace svgmrf {

using Index = Eigen::Index;

/// Canonical labeling of the unordered cluster pairs (k, l), k < l.
///
/// Pairs are enumerated lexicographically, so for K = 3 the labels are
/// (0,1) -> 0, (0,2) -> 1, (1,2) -> 2. All indices are zero-based.
class PairLabeling {
public:
    explicit PairLabeling(Index clusters);

    Index clusters() const noexcept { return clusters_; }
    Index pair_count() const noexcept { return clusters_ * (clusters_ - 1) / 2; }

    Index label(Index k, Index l) const;
    std::pair<Index, Index> pair(Index label) const;

private:
    Index clusters_;
    std::vector<std::pair<Index, Index>> pairs_;
};

PairLabeling make_labeling(Index clusters);

/// Pair similarity weights together with the fusion exponent q.
///
/// The incidence matrix A and diagonal G are never needed densely by the
/// solvers; they are exposed for diagnostics and tests. Zero-weight pairs
/// keep their row in A, G zeroes their contribution.
class WeightGraph {
public:
    /// W must be square, symmetric and nonnegative. The diagonal is ignored
    /// and stored as zero.
    WeightGraph(Eigen::MatrixXd weights, int q);

    /// Uniform weight for every pair.
    static WeightGraph uniform(Index clusters, double weight, int q);

    Index clusters() const noexcept { return labeling_.clusters(); }
    int q() const noexcept { return q_; }
    const PairLabeling& labeling() const noexcept { return labeling_; }
    const Eigen::MatrixXd& weights() const noexcept { return weights_; }
    double weight(Index k, Index l) const { return weights_(k, l); }
    double max_weight() const noexcept;

    Eigen::MatrixXd incidence() const;
    /// Diagonal of G: W_{pi^{-1}(m)}^{1/q}.
    Eigen::VectorXd weight_diag() const;
    /// A^T G^T G A for q = 2, i.e. the W-weighted graph Laplacian.
    Eigen::MatrixXd laplacian() const;

    /// sum_{k<l} W_kl |theta_k - theta_l|^q evaluated through G and A.
    double fusion_penalty(const Eigen::Ref<const Eigen::VectorXd>& theta) const;

private:
    PairLabeling labeling_;
    Eigen::MatrixXd weights_;
    int q_;
};

Eigen::MatrixXd build_incidence(const PairLabeling& labeling);
Eigen::VectorXd build_weight_diag(const Eigen::MatrixXd& weights, const PairLabeling& labeling, int q);

}  // namespace svgmrf
