#include "svgmrf/pairs.hpp"

#include "svgmrf/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace svgmrf {

SingularBackwardMapping::SingularBackwardMapping(std::size_t cluster, double nu, double condition)
    : std::runtime_error("soft-thresholded covariance of cluster " + std::to_string(cluster) +
                         " is singular or ill-conditioned (nu = " + std::to_string(nu) +
                         ", condition = " + std::to_string(condition) + ")"),
      cluster_(cluster),
      nu_(nu),
      condition_(condition) {}

SolverFailure::SolverFailure(std::size_t i, std::size_t j, const std::string& what)
    : std::runtime_error("coordinate (" + std::to_string(i) + ", " + std::to_string(j) + "): " + what),
      i_(i),
      j_(j) {}

PairLabeling::PairLabeling(Index clusters) : clusters_(clusters) {
    if (clusters < 1) {
        throw InvalidArgument("cluster count must be positive");
    }
    pairs_.reserve(static_cast<std::size_t>(pair_count()));
    for (Index k = 0; k < clusters; ++k) {
        for (Index l = k + 1; l < clusters; ++l) {
            pairs_.emplace_back(k, l);
        }
    }
}

Index PairLabeling::label(Index k, Index l) const {
    if (k > l) {
        std::swap(k, l);
    }
    if (k < 0 || l >= clusters_ || k == l) {
        throw InvalidArgument("invalid cluster pair");
    }
    return k * clusters_ - k * (k + 1) / 2 + (l - k - 1);
}

std::pair<Index, Index> PairLabeling::pair(Index label) const {
    if (label < 0 || label >= pair_count()) {
        throw InvalidArgument("pair label out of range");
    }
    return pairs_[static_cast<std::size_t>(label)];
}

PairLabeling make_labeling(Index clusters) { return PairLabeling(clusters); }

Eigen::MatrixXd build_incidence(const PairLabeling& labeling) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(labeling.pair_count(), labeling.clusters());
    for (Index m = 0; m < labeling.pair_count(); ++m) {
        const auto [k, l] = labeling.pair(m);
        a(m, k) = 1.0;
        a(m, l) = -1.0;
    }
    return a;
}

Eigen::VectorXd build_weight_diag(const Eigen::MatrixXd& weights, const PairLabeling& labeling, int q) {
    if (q != 1 && q != 2) {
        throw InvalidArgument("q must be 1 or 2");
    }
    if (weights.rows() != labeling.clusters() || weights.cols() != labeling.clusters()) {
        throw InvalidArgument("weight matrix does not match the labeling");
    }
    Eigen::VectorXd g(labeling.pair_count());
    for (Index m = 0; m < labeling.pair_count(); ++m) {
        const auto [k, l] = labeling.pair(m);
        const double w = weights(k, l);
        if (!(w >= 0.0)) {
            throw InvalidArgument("weights must be nonnegative");
        }
        g(m) = q == 1 ? w : std::sqrt(w);
    }
    return g;
}

WeightGraph::WeightGraph(Eigen::MatrixXd weights, int q)
    : labeling_(weights.rows()), weights_(std::move(weights)), q_(q) {
    if (q != 1 && q != 2) {
        throw InvalidArgument("q must be 1 or 2");
    }
    if (weights_.rows() != weights_.cols()) {
        throw InvalidArgument("weight matrix must be square");
    }
    const Index k_count = weights_.rows();
    for (Index k = 0; k < k_count; ++k) {
        weights_(k, k) = 0.0;
        for (Index l = 0; l < k_count; ++l) {
            const double w = weights_(k, l);
            if (!std::isfinite(w) || w < 0.0) {
                throw InvalidArgument("weights must be finite and nonnegative");
            }
            const double scale = std::max({1.0, std::abs(w), std::abs(weights_(l, k))});
            if (std::abs(w - weights_(l, k)) > 1e-12 * scale) {
                throw InvalidArgument("weight matrix must be symmetric");
            }
        }
    }
    weights_ = 0.5 * (weights_ + weights_.transpose()).eval();
}

WeightGraph WeightGraph::uniform(Index clusters, double weight, int q) {
    return WeightGraph(Eigen::MatrixXd::Constant(clusters, clusters, weight), q);
}

double WeightGraph::max_weight() const noexcept {
    return weights_.size() == 0 ? 0.0 : weights_.maxCoeff();
}

Eigen::MatrixXd WeightGraph::incidence() const { return build_incidence(labeling_); }

Eigen::VectorXd WeightGraph::weight_diag() const { return build_weight_diag(weights_, labeling_, q_); }

Eigen::MatrixXd WeightGraph::laplacian() const {
    Eigen::MatrixXd lap = -weights_;
    for (Index k = 0; k < clusters(); ++k) {
        lap(k, k) = weights_.row(k).sum();
    }
    return lap;
}

double WeightGraph::fusion_penalty(const Eigen::Ref<const Eigen::VectorXd>& theta) const {
    if (theta.size() != clusters()) {
        throw InvalidArgument("stacked vector length must equal the cluster count");
    }
    // G A theta, one row per pair.
    double total = 0.0;
    for (Index m = 0; m < labeling_.pair_count(); ++m) {
        const auto [k, l] = labeling_.pair(m);
        const double g = q_ == 1 ? weights_(k, l) : std::sqrt(weights_(k, l));
        const double v = std::abs(g * (theta(k) - theta(l)));
        total += q_ == 1 ? v : v * v;
    }
    return total;
}

}  // namespace svgmrf
