#include "svgmrf/eval.hpp"

#include "svgmrf/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace svgmrf {

namespace {

void check_shapes(const std::vector<Eigen::MatrixXd>& estimate, const std::vector<Eigen::MatrixXd>& truth) {
    if (estimate.size() != truth.size() || truth.empty()) {
        throw InvalidArgument("estimate and truth must have the same nonzero number of clusters");
    }
    for (std::size_t k = 0; k < truth.size(); ++k) {
        if (estimate[k].rows() != truth[k].rows() || estimate[k].cols() != truth[k].cols() ||
            truth[k].rows() != truth[k].cols()) {
            throw InvalidArgument("estimate and truth dimensions differ for cluster " + std::to_string(k));
        }
    }
}

std::optional<double> ratio(std::size_t num, std::size_t den) {
    if (den == 0) {
        return std::nullopt;
    }
    return static_cast<double>(num) / static_cast<double>(den);
}

std::vector<Eigen::MatrixXd> to_dense(const PrecisionEstimate& estimate) {
    std::vector<Eigen::MatrixXd> out;
    out.reserve(estimate.clusters());
    for (std::size_t k = 0; k < estimate.clusters(); ++k) {
        out.push_back(estimate.dense(k));
    }
    return out;
}

}  // namespace

SupportMetrics SupportMetrics::from_counts(std::size_t tp, std::size_t fp, std::size_t fn,
                                           std::optional<std::size_t> cluster) {
    SupportMetrics m;
    m.tp = tp;
    m.fp = fp;
    m.fn = fn;
    m.precision = ratio(tp, tp + fp);
    m.recall = ratio(tp, tp + fn);
    m.f1 = ratio(2 * tp, 2 * tp + fp + fn);
    m.cluster = cluster;
    return m;
}

SupportMetrics edge_metrics(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& truth) {
    if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols() || truth.rows() != truth.cols()) {
        throw InvalidArgument("estimate and truth dimensions differ");
    }
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    for (Index j = 0; j < truth.cols(); ++j) {
        for (Index i = 0; i < j; ++i) {
            const bool est = estimate(i, j) != 0.0;
            const bool tru = truth(i, j) != 0.0;
            tp += est && tru;
            fp += est && !tru;
            fn += !est && tru;
        }
    }
    return SupportMetrics::from_counts(tp, fp, fn);
}

std::vector<SupportMetrics> support_metrics(const std::vector<Eigen::MatrixXd>& estimate,
                                            const std::vector<Eigen::MatrixXd>& truth, bool pooled) {
    check_shapes(estimate, truth);
    std::vector<SupportMetrics> rows;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    for (std::size_t k = 0; k < truth.size(); ++k) {
        SupportMetrics m = edge_metrics(estimate[k], truth[k]);
        tp += m.tp;
        fp += m.fp;
        fn += m.fn;
        m.cluster = k;
        rows.push_back(m);
    }
    if (pooled) {
        return {SupportMetrics::from_counts(tp, fp, fn)};
    }
    return rows;
}

std::vector<SupportMetrics> support_metrics(const PrecisionEstimate& estimate,
                                            const std::vector<Eigen::MatrixXd>& truth, bool pooled) {
    return support_metrics(to_dense(estimate), truth, pooled);
}

SupportMetrics difference_metrics(const std::vector<Eigen::MatrixXd>& estimate,
                                  const std::vector<Eigen::MatrixXd>& truth, std::size_t k, std::size_t l) {
    check_shapes(estimate, truth);
    if (k >= truth.size() || l >= truth.size() || k == l) {
        throw InvalidArgument("difference metrics need two distinct valid clusters");
    }
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    for (Index j = 0; j < truth[k].cols(); ++j) {
        for (Index i = 0; i <= j; ++i) {
            const bool est = estimate[k](i, j) != estimate[l](i, j);
            const bool tru = truth[k](i, j) != truth[l](i, j);
            tp += est && tru;
            fp += est && !tru;
            fn += !est && tru;
        }
    }
    return SupportMetrics::from_counts(tp, fp, fn);
}

SupportMetrics difference_metrics(const std::vector<Eigen::MatrixXd>& estimate,
                                  const std::vector<Eigen::MatrixXd>& truth) {
    check_shapes(estimate, truth);
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    for (std::size_t k = 0; k < truth.size(); ++k) {
        for (std::size_t l = k + 1; l < truth.size(); ++l) {
            const SupportMetrics m = difference_metrics(estimate, truth, k, l);
            tp += m.tp;
            fp += m.fp;
            fn += m.fn;
        }
    }
    return SupportMetrics::from_counts(tp, fp, fn);
}

EstimationErrors estimation_errors(const std::vector<Eigen::MatrixXd>& estimate,
                                   const std::vector<Eigen::MatrixXd>& truth) {
    check_shapes(estimate, truth);
    EstimationErrors out;
    for (std::size_t k = 0; k < truth.size(); ++k) {
        out.max_norm.push_back((estimate[k] - truth[k]).cwiseAbs().maxCoeff());
    }
    const Index d = truth.front().rows();
    double sum = 0.0;
    for (Index j = 0; j < d; ++j) {
        for (Index i = 0; i <= j; ++i) {
            double sq = 0.0;
            for (std::size_t k = 0; k < truth.size(); ++k) {
                const double diff = estimate[k](i, j) - truth[k](i, j);
                sq += diff * diff;
            }
            const double norm = std::sqrt(sq);
            out.coordinate_l2_max = std::max(out.coordinate_l2_max, norm);
            sum += norm;
        }
    }
    out.coordinate_l2_mean = sum / static_cast<double>(coordinate_count(d));
    return out;
}

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& m, double rel_cutoff) {
    if (m.size() == 0) {
        return Eigen::MatrixXd::Zero(m.cols(), m.rows());
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    const double cutoff = rel_cutoff * s(0);
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
    for (Index i = 0; i < s.size(); ++i) {
        if (s(i) > cutoff) {
            inv(i) = 1.0 / s(i);
        }
    }
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

IcDiagnostics check_irrepresentability(const Eigen::VectorXd& theta, const WeightGraph& weights, double mu,
                                       double gamma, double tol) {
    const Index K = weights.clusters();
    if (theta.size() != K) {
        throw InvalidArgument("theta length does not match the cluster count");
    }
    if (!(mu > 0.0) || !(gamma >= 0.0) || !theta.allFinite()) {
        throw InvalidArgument("irrepresentability needs mu > 0, gamma >= 0 and finite theta");
    }
    const Index m = weights.labeling().pair_count();
    IcDiagnostics out;
    out.B.resize(m + K, K);
    out.B.topRows(m) = (gamma / mu) * weights.weight_diag().asDiagonal() * weights.incidence();
    out.B.bottomRows(K).setIdentity();

    const Eigen::VectorXd b_theta = out.B * theta;
    std::vector<Index> off;
    for (Index r = 0; r < out.B.rows(); ++r) {
        (b_theta(r) != 0.0 ? out.support : off).push_back(r);
    }
    if (out.support.empty() || off.empty()) {
        return out;
    }
    Eigen::MatrixXd bs(static_cast<Index>(out.support.size()), K);
    Eigen::VectorXd sign(static_cast<Index>(out.support.size()));
    for (std::size_t r = 0; r < out.support.size(); ++r) {
        bs.row(static_cast<Index>(r)) = out.B.row(out.support[r]);
        sign(static_cast<Index>(r)) = b_theta(out.support[r]) > 0.0 ? 1.0 : -1.0;
    }
    Eigen::MatrixXd bc(static_cast<Index>(off.size()), K);
    for (std::size_t r = 0; r < off.size(); ++r) {
        bc.row(static_cast<Index>(r)) = out.B.row(off[r]);
    }
    const Eigen::MatrixXd proj = bc * pseudo_inverse(bs);
    out.lhs = (proj * sign).cwiseAbs().maxCoeff();
    out.alpha_hat = 1.0 - out.lhs;
    out.kappa_ic = proj.cwiseAbs().rowwise().sum().maxCoeff() + 1.0;
    out.ic_holds = out.lhs <= 1.0 - tol;
    return out;
}

IncoherenceResult check_mutual_incoherence(const WeightGraph& weights, double gamma, const std::vector<Index>& support) {
    if (!(gamma >= 0.0)) {
        throw InvalidArgument("gamma must be nonnegative");
    }
    const Index K = weights.clusters();
    std::vector<bool> in(static_cast<std::size_t>(K), false);
    for (const Index s : support) {
        if (s < 0 || s >= K || in[static_cast<std::size_t>(s)]) {
            throw InvalidArgument("support indices must be distinct and in range");
        }
        in[static_cast<std::size_t>(s)] = true;
    }
    IncoherenceResult out;
    if (support.empty()) {
        return out;
    }
    const Eigen::MatrixXd M = Eigen::MatrixXd::Identity(K, K) + gamma * weights.laplacian();
    const auto n = static_cast<Index>(support.size());
    Eigen::MatrixXd mss(n, n);
    for (Index a = 0; a < n; ++a) {
        for (Index b = 0; b < n; ++b) {
            mss(a, b) = M(support[static_cast<std::size_t>(a)], support[static_cast<std::size_t>(b)]);
        }
    }
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(mss);
    for (Index j = 0; j < K; ++j) {
        if (in[static_cast<std::size_t>(j)]) {
            continue;
        }
        Eigen::VectorXd col(n);
        for (Index a = 0; a < n; ++a) {
            col(a) = M(support[static_cast<std::size_t>(a)], j);
        }
        out.value = std::max(out.value, ldlt.solve(col).lpNorm<1>());
    }
    out.holds_at_half = out.value <= 0.5;
    return out;
}

namespace {

// All vectors over `alphabet` of length K except the zero vector.
std::vector<Eigen::VectorXd> patterns(Index K, const std::vector<double>& alphabet) {
    std::vector<Eigen::VectorXd> out;
    const auto base = alphabet.size();
    std::size_t total = 1;
    for (Index k = 0; k < K; ++k) {
        total *= base;
    }
    for (std::size_t code = 0; code < total; ++code) {
        Eigen::VectorXd v(K);
        std::size_t c = code;
        for (Index k = 0; k < K; ++k) {
            v(k) = alphabet[c % base];
            c /= base;
        }
        if (!v.isZero(0.0)) {
            out.push_back(std::move(v));
        }
    }
    return out;
}

std::string describe(const Eigen::VectorXd& v) {
    std::string s = "(";
    for (Index k = 0; k < v.size(); ++k) {
        s += (k ? "," : "") + std::to_string(static_cast<int>(v(k)));
    }
    return s + ")";
}

}  // namespace

SweepReport irrepresentability_sweep(Index max_k, const std::vector<double>& ratios, double tol) {
    SweepReport report;
    report.worst_value = 1.0;
    report.worst_margin = std::numeric_limits<double>::infinity();
    for (const double r : ratios) {
        if (!(r >= 1.0 && r <= 2.0)) {
            throw InvalidArgument("gamma/mu ratios must lie in [1, 2]");
        }
    }
    for (Index K = 2; K <= max_k; ++K) {
        const WeightGraph weights = WeightGraph::uniform(K, 1.0, 1);
        std::vector<Eigen::VectorXd> all = patterns(K, {0.0, 1.0, 2.0});
        const std::vector<Eigen::VectorXd> signed_patterns = patterns(K, {-1.0, 0.0, 1.0});
        all.insert(all.end(), signed_patterns.begin(), signed_patterns.end());
        for (const double r : ratios) {
            const double mu = 1.0;
            const double gamma = r * mu;
            for (const auto& theta : all) {
                const IcDiagnostics diag = check_irrepresentability(theta, weights, mu, gamma, tol);
                const double margin = diag.alpha_hat - mu / gamma;
                ++report.cases;
                report.worst_value = std::max(report.worst_value, diag.kappa_ic);
                report.worst_margin = std::min(report.worst_margin, margin);
                const bool ok = diag.ic_holds && margin >= -tol && diag.kappa_ic >= 1.0 - tol &&
                                diag.kappa_ic <= 5.0 + tol;
                if (!ok) {
                    if (report.failures == 0) {
                        report.first_failure = "K=" + std::to_string(K) + " gamma/mu=" + std::to_string(r) +
                                               " theta=" + describe(theta);
                    }
                    ++report.failures;
                }
            }
        }
    }
    return report;
}

SweepReport incoherence_sweep(Index max_k, const std::vector<double>& fractions, double tol) {
    SweepReport report;
    for (const double f : fractions) {
        if (!(f > 0.0 && f < 1.0)) {
            throw InvalidArgument("gamma fractions must lie in (0, 1)");
        }
    }
    for (Index K = 2; K <= max_k; ++K) {
        const WeightGraph weights = WeightGraph::uniform(K, 1.0, 2);
        for (const double f : fractions) {
            const double gamma = f / (2.0 * static_cast<double>(K) * weights.max_weight());
            for (std::size_t mask = 0; mask < (std::size_t{1} << K); ++mask) {
                std::vector<Index> support;
                for (Index k = 0; k < K; ++k) {
                    if (mask >> k & 1U) {
                        support.push_back(k);
                    }
                }
                const IncoherenceResult res = check_mutual_incoherence(weights, gamma, support);
                ++report.cases;
                report.worst_value = std::max(report.worst_value, res.value);
                if (res.value > 0.5 + tol) {
                    if (report.failures == 0) {
                        report.first_failure = "K=" + std::to_string(K) + " gamma=" + std::to_string(gamma) +
                                               " support mask=" + std::to_string(mask);
                    }
                    ++report.failures;
                }
            }
        }
    }
    return report;
}

}  // namespace svgmrf
