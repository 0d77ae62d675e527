#include "svgmrf/covariance.hpp"

#include "svgmrf/error.hpp"
#include "svgmrf/parallel.hpp"

#include <cmath>
#include <limits>

namespace svgmrf {

ClusterDataset::ClusterDataset(std::vector<Eigen::MatrixXd> samples) : samples_(std::move(samples)) {
    if (samples_.empty()) {
        throw InvalidArgument("dataset needs at least one cluster");
    }
    const Eigen::Index d = samples_.front().cols();
    if (d < 1) {
        throw InvalidArgument("dataset needs at least one variable");
    }
    for (std::size_t k = 0; k < samples_.size(); ++k) {
        const auto& x = samples_[k];
        if (x.cols() != d) {
            throw InvalidArgument("cluster " + std::to_string(k) + " has " + std::to_string(x.cols()) +
                                  " variables, expected " + std::to_string(d));
        }
        if (x.rows() < 1) {
            throw InvalidArgument("cluster " + std::to_string(k) + " has no samples");
        }
        if (!x.allFinite()) {
            throw InvalidArgument("cluster " + std::to_string(k) + " has non-finite samples");
        }
    }
}

std::vector<Eigen::Index> ClusterDataset::sample_counts() const {
    std::vector<Eigen::Index> counts;
    counts.reserve(samples_.size());
    for (const auto& x : samples_) {
        counts.push_back(x.rows());
    }
    return counts;
}

Eigen::Index ClusterDataset::min_sample_count() const {
    Eigen::Index n = std::numeric_limits<Eigen::Index>::max();
    for (const auto& x : samples_) {
        n = std::min(n, x.rows());
    }
    return n;
}

Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& samples, bool center) {
    if (samples.rows() < 1) {
        throw InvalidArgument("sample covariance needs at least one sample");
    }
    const double n = static_cast<double>(samples.rows());
    Eigen::MatrixXd cov(samples.cols(), samples.cols());
    if (center) {
        const Eigen::MatrixXd centered = samples.rowwise() - samples.colwise().mean();
        cov.setZero().selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose(), 1.0 / n);
    } else {
        cov.setZero().selfadjointView<Eigen::Lower>().rankUpdate(samples.transpose(), 1.0 / n);
    }
    cov.triangularView<Eigen::StrictlyUpper>() = cov.transpose();
    return cov;
}

std::vector<Eigen::MatrixXd> sample_covariances(const ClusterDataset& data, bool center) {
    std::vector<Eigen::MatrixXd> covs;
    covs.reserve(data.clusters());
    for (std::size_t k = 0; k < data.clusters(); ++k) {
        covs.push_back(sample_covariance(data.samples(k), center));
    }
    return covs;
}

Eigen::MatrixXd soft_threshold(const Eigen::MatrixXd& m, double nu) {
    if (!(nu >= 0.0)) {
        throw InvalidArgument("soft-threshold level must be nonnegative");
    }
    if (m.rows() != m.cols()) {
        throw InvalidArgument("soft-threshold expects a square matrix");
    }
    Eigen::MatrixXd out = m;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            if (i == j) {
                continue;
            }
            const double v = m(i, j);
            const double shrink = std::min(std::abs(v), nu);
            out(i, j) = v - std::copysign(shrink, v);
        }
    }
    return out;
}

BackwardMapping backward_mapping(const Eigen::MatrixXd& covariance, double nu, std::size_t cluster,
                                 double condition_cap) {
    const Eigen::MatrixXd thresholded = soft_threshold(covariance, nu);
    if (!thresholded.allFinite()) {
        throw InvalidArgument("covariance has non-finite entries");
    }
    // Condition number is |lambda|_max / |lambda|_min.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(thresholded);
    if (eig.info() != Eigen::Success) {
        throw SingularBackwardMapping(cluster, nu, std::numeric_limits<double>::infinity());
    }
    const Eigen::VectorXd magnitudes = eig.eigenvalues().cwiseAbs();
    const double largest = magnitudes.maxCoeff();
    const double smallest = magnitudes.minCoeff();
    const double condition = smallest > 0.0 ? largest / smallest : std::numeric_limits<double>::infinity();
    if (!(condition <= condition_cap)) {
        throw SingularBackwardMapping(cluster, nu, condition);
    }
    const Eigen::MatrixXd& v = eig.eigenvectors();
    Eigen::MatrixXd inverse = v * eig.eigenvalues().cwiseInverse().asDiagonal() * v.transpose();
    BackwardMapping out;
    out.matrix = 0.5 * (inverse + inverse.transpose());
    out.nu = nu;
    return out;
}

std::vector<BackwardMapping> backward_mappings(const std::vector<Eigen::MatrixXd>& covariances,
                                               const std::vector<double>& nus, double condition_cap,
                                               unsigned workers) {
    if (covariances.size() != nus.size()) {
        throw InvalidArgument("one threshold per cluster is required");
    }
    std::vector<BackwardMapping> out(covariances.size());
    parallel_for(covariances.size(), workers,
                 [&](std::size_t k) { out[k] = backward_mapping(covariances[k], nus[k], k, condition_cap); });
    return out;
}

double threshold_from_constant(double c3, double dimension, Eigen::Index samples) {
    if (!(c3 > 0.0) || !std::isfinite(c3)) {
        throw InvalidArgument("threshold constant must be positive");
    }
    if (!(dimension >= 2.0)) {
        throw InvalidArgument("threshold needs dimension >= 2");
    }
    if (samples < 1) {
        throw InvalidArgument("threshold needs at least one sample");
    }
    return c3 * std::sqrt(std::log(dimension) / static_cast<double>(samples));
}

TruthConstants truth_constants(const Eigen::MatrixXd& precision, double p) {
    if (!(p >= 0.0 && p < 1.0)) {
        throw InvalidArgument("weak-sparsity exponent must lie in [0, 1)");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(precision);
    if (llt.info() != Eigen::Success) {
        throw NotPositiveDefinite("true precision matrix is not positive definite");
    }
    const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(precision.rows(), precision.cols()));
    TruthConstants c;
    c.precision_inf_norm = precision.cwiseAbs().rowwise().sum().maxCoeff();
    c.covariance_lower = 1.0 / c.precision_inf_norm;
    c.covariance_max = cov.cwiseAbs().maxCoeff();
    double worst = 0.0;
    for (Eigen::Index i = 0; i < cov.rows(); ++i) {
        double row = 0.0;
        for (Eigen::Index j = 0; j < cov.cols(); ++j) {
            const double a = std::abs(cov(i, j));
            // |x|^0 counts nonzeros.
            row += p == 0.0 ? (a != 0.0 ? 1.0 : 0.0) : std::pow(a, p);
        }
        worst = std::max(worst, row);
    }
    c.weak_sparsity = worst;
    return c;
}

ChangeConstants change_constants(const std::vector<Eigen::MatrixXd>& precisions) {
    ChangeConstants c;
    if (precisions.empty()) {
        return c;
    }
    const Eigen::Index d = precisions.front().rows();
    for (const auto& p : precisions) {
        if (p.rows() != d || p.cols() != d) {
            throw InvalidArgument("precision matrices must share one dimension");
        }
    }
    for (Eigen::Index j = 0; j < d; ++j) {
        for (Eigen::Index i = 0; i <= j; ++i) {
            double sq = 0.0;
            std::size_t count = 0;
            for (std::size_t k = 0; k < precisions.size(); ++k) {
                for (std::size_t l = k + 1; l < precisions.size(); ++l) {
                    const double diff = precisions[k](i, j) - precisions[l](i, j);
                    sq += diff * diff;
                    count += diff != 0.0 ? 1 : 0;
                }
            }
            c.smoothness = std::max(c.smoothness, std::sqrt(sq));
            c.difference_sparsity = std::max(c.difference_sparsity, count);
        }
    }
    return c;
}

}  // namespace svgmrf
