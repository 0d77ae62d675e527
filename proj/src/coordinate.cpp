#include "svgmrf/coordinate.hpp"

#include "svgmrf/detail/box_lsq.hpp"
#include "svgmrf/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

namespace svgmrf {
namespace {

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

double soft(double v, double t) {
    const double a = std::abs(v) - t;
    return a > 0.0 ? std::copysign(a, v) : 0.0;
}

void check_inputs(const Eigen::VectorXd& f, const WeightGraph& w, double mu, double gamma) {
    if (f.size() != w.clusters()) {
        throw InvalidArgument("coordinate vector length must equal the cluster count");
    }
    if (!f.allFinite()) {
        throw InvalidArgument("coordinate vector has non-finite entries");
    }
    if (!(mu >= 0.0) || !std::isfinite(mu)) {
        throw InvalidArgument("mu must be finite and nonnegative");
    }
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
        throw InvalidArgument("gamma must be finite and nonnegative");
    }
}

// Stationarity vector 2(theta - f) + d(penalties), with the subgradients of
// the nondifferentiable terms chosen to minimize its Euclidean norm.
Eigen::VectorXd stationarity(const Eigen::VectorXd& f, const WeightGraph& w, double mu, double gamma,
                             const Eigen::VectorXd& theta) {
    const Index k_count = theta.size();
    Eigen::VectorXd g = 2.0 * (theta - f);
    std::vector<detail::SignedColumn> free;
    for (Index k = 0; k < k_count; ++k) {
        if (theta(k) != 0.0) {
            g(k) += mu * sign_of(theta(k));
        } else if (mu > 0.0) {
            free.push_back({k, -1, mu});
        }
    }
    if (gamma > 0.0) {
        if (w.q() == 2) {
            g.noalias() += 2.0 * gamma * (w.laplacian() * theta);
        } else {
            for (Index k = 0; k < k_count; ++k) {
                for (Index l = k + 1; l < k_count; ++l) {
                    const double c = gamma * w.weight(k, l);
                    if (c == 0.0) {
                        continue;
                    }
                    const double diff = theta(k) - theta(l);
                    if (diff != 0.0) {
                        const double s = sign_of(diff);
                        g(k) += c * s;
                        g(l) -= c * s;
                    } else {
                        free.push_back({k, l, c});
                    }
                }
            }
        }
    }
    return detail::minimize_box_residual(g, free);
}

double tolerance_for(double tol, const Eigen::VectorXd& f, const Eigen::VectorXd& theta, double mu,
                     double gamma, const WeightGraph& w) {
    // Roundoff floor of evaluating the stationarity vector; only binds for
    // very large gamma.
    const double scale = 2.0 * (1.0 + 2.0 * gamma * w.max_weight() * static_cast<double>(w.clusters())) *
                             std::max(theta.cwiseAbs().maxCoeff(), f.cwiseAbs().maxCoeff()) +
                         mu;
    return std::max(tol, 64.0 * std::numeric_limits<double>::epsilon() * scale);
}

// Exact minimizer on the face defined by grouping `approx`: entries within
// `tol` (single linkage on sorted values) share a value, and a group linked
// to 0 is pinned at 0. Returns nullopt when the closed-form group values
// contradict the signs and ordering the face assumes.
std::optional<Eigen::VectorXd> polish_fused(const Eigen::VectorXd& f, const WeightGraph& w, double mu,
                                            double gamma, const Eigen::VectorXd& approx, double tol) {
    const Index k_count = f.size();
    struct Point {
        double value;
        Index index;  // -1 is the zero anchor
    };
    std::vector<Point> points;
    points.reserve(static_cast<std::size_t>(k_count) + 1);
    for (Index k = 0; k < k_count; ++k) {
        points.push_back({approx(k), k});
    }
    if (mu > 0.0) {
        points.push_back({0.0, -1});
    }
    std::sort(points.begin(), points.end(), [](const Point& a, const Point& b) {
        return a.value < b.value || (a.value == b.value && a.index < b.index);
    });

    std::vector<Index> group_of(static_cast<std::size_t>(k_count), -1);
    std::vector<bool> pinned;
    std::vector<double> sum_approx;
    std::vector<double> sum_f;
    std::vector<double> size;
    Index current = -1;
    for (std::size_t p = 0; p < points.size(); ++p) {
        if (p == 0 || points[p].value - points[p - 1].value > tol) {
            ++current;
            pinned.push_back(false);
            sum_approx.push_back(0.0);
            sum_f.push_back(0.0);
            size.push_back(0.0);
        }
        const auto g = static_cast<std::size_t>(current);
        if (points[p].index < 0) {
            pinned[g] = true;
        } else {
            group_of[static_cast<std::size_t>(points[p].index)] = current;
            sum_approx[g] += points[p].value;
            sum_f[g] += f(points[p].index);
            size[g] += 1.0;
        }
    }
    const auto groups = static_cast<std::size_t>(current + 1);

    Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(static_cast<Index>(groups), static_cast<Index>(groups));
    if (gamma > 0.0) {
        for (Index k = 0; k < k_count; ++k) {
            for (Index l = k + 1; l < k_count; ++l) {
                const Index a = group_of[static_cast<std::size_t>(k)];
                const Index b = group_of[static_cast<std::size_t>(l)];
                if (a != b) {
                    cross(a, b) += w.weight(k, l);
                    cross(b, a) += w.weight(k, l);
                }
            }
        }
    }

    std::vector<double> value(groups, 0.0);
    std::vector<double> sign(groups, 0.0);
    for (std::size_t g = 0; g < groups; ++g) {
        if (pinned[g] || size[g] == 0.0) {
            continue;
        }
        sign[g] = mu > 0.0 ? sign_of(sum_approx[g]) : 0.0;
        double fused = 0.0;
        for (std::size_t h = 0; h < groups; ++h) {
            if (h != g) {
                fused += cross(static_cast<Index>(g), static_cast<Index>(h)) * (g > h ? 1.0 : -1.0);
            }
        }
        value[g] = (sum_f[g] - 0.5 * mu * size[g] * sign[g] - 0.5 * gamma * fused) / size[g];
    }
    for (std::size_t g = 0; g < groups; ++g) {
        if (!pinned[g] && mu > 0.0 && value[g] * sign[g] <= 0.0) {
            return std::nullopt;
        }
        for (std::size_t h = g + 1; h < groups; ++h) {
            if (gamma > 0.0 && cross(static_cast<Index>(g), static_cast<Index>(h)) > 0.0 && !(value[g] < value[h])) {
                return std::nullopt;
            }
        }
    }
    Eigen::VectorXd theta(k_count);
    for (Index k = 0; k < k_count; ++k) {
        theta(k) = value[static_cast<std::size_t>(group_of[static_cast<std::size_t>(k)])];
    }
    return theta;
}

}  // namespace

double coordinate_objective(const CoordinateProblem& problem, const Eigen::VectorXd& theta) {
    check_inputs(problem.f, problem.weights, problem.mu, problem.gamma);
    if (theta.size() != problem.f.size()) {
        throw InvalidArgument("candidate length must equal the cluster count");
    }
    return (theta - problem.f).squaredNorm() + problem.mu * theta.lpNorm<1>() +
           problem.gamma * problem.weights.fusion_penalty(theta);
}

double kkt_residual(const CoordinateProblem& problem, const Eigen::VectorXd& theta) {
    check_inputs(problem.f, problem.weights, problem.mu, problem.gamma);
    if (theta.size() != problem.f.size() || !theta.allFinite()) {
        throw InvalidArgument("candidate must be finite with one entry per cluster");
    }
    return stationarity(problem.f, problem.weights, problem.mu, problem.gamma, theta).cwiseAbs().maxCoeff();
}

Eigen::VectorXd snap_fused(const Eigen::VectorXd& theta, double tol) {
    const Index k_count = theta.size();
    std::vector<Index> order(static_cast<std::size_t>(k_count));
    std::iota(order.begin(), order.end(), Index{0});
    std::sort(order.begin(), order.end(), [&](Index a, Index b) {
        return theta(a) < theta(b) || (theta(a) == theta(b) && a < b);
    });
    Eigen::VectorXd out = theta;
    std::size_t start = 0;
    while (start < order.size()) {
        std::size_t end = start + 1;
        while (end < order.size() && theta(order[end]) - theta(order[end - 1]) <= tol) {
            ++end;
        }
        double mean = 0.0;
        bool touches_zero = false;
        for (std::size_t p = start; p < end; ++p) {
            mean += theta(order[p]);
        }
        mean /= static_cast<double>(end - start);
        // The group is linked to zero when zero falls inside its span
        // extended by tol on both sides.
        const double lo = theta(order[start]);
        const double hi = theta(order[end - 1]);
        touches_zero = lo - tol <= 0.0 && hi + tol >= 0.0;
        for (std::size_t p = start; p < end; ++p) {
            out(order[p]) = touches_zero ? 0.0 : mean;
        }
        start = end;
    }
    return out;
}

CoordinateSolver::CoordinateSolver(WeightGraph weights, double gamma, SolverOptions options)
    : weights_(std::move(weights)), gamma_(gamma), options_(options) {
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
        throw InvalidArgument("gamma must be finite and nonnegative");
    }
    const Index k_count = weights_.clusters();
    if (weights_.q() == 2) {
        const Eigen::MatrixXd system =
            Eigen::MatrixXd::Identity(k_count, k_count) + gamma_ * weights_.laplacian();
        Eigen::LLT<Eigen::MatrixXd> llt(system);
        if (llt.info() != Eigen::Success) {
            throw NotPositiveDefinite("I + gamma * Laplacian is not positive definite");
        }
        factor_ = llt.matrixU();
        gram_ = factor_.transpose() * factor_;
    } else {
        for (Index k = 0; k < k_count; ++k) {
            for (Index l = k + 1; l < k_count; ++l) {
                const double c = gamma_ * weights_.weight(k, l);
                if (c > 0.0) {
                    fused_rows_.push_back({k, l, c});
                }
            }
        }
    }
}

CoordinateSolution CoordinateSolver::solve(const Eigen::VectorXd& f, double mu) const {
    check_inputs(f, weights_, mu, gamma_);
    return weights_.q() == 2 ? solve_q2(f, mu) : solve_q1(f, mu);
}

CoordinateSolution CoordinateSolver::solve_q2(const Eigen::VectorXd& f, double mu) const {
    const Index k_count = f.size();
    // y = C^{-T} f, then work with the Lasso ||y - C theta||^2 + mu ||theta||_1
    // through its Gram form: C^T C theta and C^T y.
    const Eigen::VectorXd y = factor_.transpose().triangularView<Eigen::Lower>().solve(f);
    const Eigen::VectorXd cty = factor_.transpose() * y;

    auto residual_of = [&](const Eigen::VectorXd& theta) {
        const Eigen::VectorXd r = stationarity(f, weights_, mu, gamma_, theta);
        return r.cwiseAbs().maxCoeff();
    };

    CoordinateSolution sol;
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(k_count);
    const double half_mu = 0.5 * mu;
    std::vector<Index> support;
    std::vector<Index> last_support;
    for (int sweep = 1; sweep <= options_.max_sweeps; ++sweep) {
        for (Index k = 0; k < k_count; ++k) {
            const double z = cty(k) - gram_.row(k).dot(theta) + gram_(k, k) * theta(k);
            theta(k) = soft(z, half_mu) / gram_(k, k);
        }
        sol.sweeps = sweep;
        const double tol = tolerance_for(options_.kkt_tolerance, f, theta, mu, gamma_, weights_);
        support.clear();
        for (Index k = 0; k < k_count; ++k) {
            if (theta(k) != 0.0) {
                support.push_back(k);
            }
        }
        // Once the support is stable, solve the reduced system exactly.
        if (sweep > 1 && support == last_support) {
            const auto s = static_cast<Index>(support.size());
            Eigen::VectorXd candidate = Eigen::VectorXd::Zero(k_count);
            bool consistent = true;
            if (s > 0) {
                Eigen::MatrixXd sub(s, s);
                Eigen::VectorXd rhs(s);
                for (Index a = 0; a < s; ++a) {
                    rhs(a) = cty(support[a]) - half_mu * sign_of(theta(support[a]));
                    for (Index b = 0; b < s; ++b) {
                        sub(a, b) = gram_(support[a], support[b]);
                    }
                }
                const Eigen::VectorXd exact = sub.llt().solve(rhs);
                for (Index a = 0; a < s; ++a) {
                    consistent = consistent && sign_of(exact(a)) == sign_of(theta(support[a]));
                    candidate(support[a]) = exact(a);
                }
            }
            if (consistent && residual_of(candidate) <= tol) {
                theta = candidate;
                sol.converged = true;
                break;
            }
        }
        if (residual_of(theta) <= tol) {
            sol.converged = true;
            break;
        }
        last_support = support;
    }
    const Eigen::VectorXd r = stationarity(f, weights_, mu, gamma_, theta);
    sol.kkt_residual = r.cwiseAbs().maxCoeff();
    // 1/4 r^T M^{-1} r with M = C^T C.
    const Eigen::VectorXd half = factor_.transpose().triangularView<Eigen::Lower>().solve(r);
    sol.duality_gap = 0.25 * half.squaredNorm();
    sol.theta = std::move(theta);
    return sol;
}

CoordinateSolution CoordinateSolver::solve_q1(const Eigen::VectorXd& f, double mu) const {
    const Index k_count = f.size();
    CoordinateSolution sol;

    auto finish = [&](Eigen::VectorXd theta, bool converged) {
        Eigen::VectorXd r = stationarity(f, weights_, mu, gamma_, theta);
        const Eigen::VectorXd snapped = snap_fused(theta, options_.snap_tolerance);
        if (snapped != theta) {
            Eigen::VectorXd rs = stationarity(f, weights_, mu, gamma_, snapped);
            const double tol = tolerance_for(options_.kkt_tolerance, f, snapped, mu, gamma_, weights_);
            if (rs.cwiseAbs().maxCoeff() <= tol) {
                theta = snapped;
                r = std::move(rs);
            }
        }
        sol.kkt_residual = r.cwiseAbs().maxCoeff();
        sol.duality_gap = 0.25 * r.squaredNorm();
        sol.converged = converged;
        sol.theta = std::move(theta);
        return sol;
    };

    // Separable case: scalar soft-threshold by mu / 2.
    if (fused_rows_.empty()) {
        Eigen::VectorXd theta(k_count);
        for (Index k = 0; k < k_count; ++k) {
            theta(k) = soft(f(k), 0.5 * mu);
        }
        sol.sweeps = 0;
        return finish(std::move(theta), true);
    }

    // Dual: min_u ||f - D^T u / 2||^2 over u in [-1, 1]^m, with rows of D
    // gamma W_kl (e_k - e_l) and mu e_k; theta = f - D^T u / 2.
    Eigen::VectorXd theta = f;
    std::vector<double> u_pair(fused_rows_.size(), 0.0);
    std::vector<double> u_abs(static_cast<std::size_t>(k_count), 0.0);
    auto try_polish = [&](double move) -> std::optional<Eigen::VectorXd> {
        for (const double scale : {1e3, 10.0}) {
            const double tol = std::clamp(scale * move, 1e-13, 1e-1);
            auto candidate = polish_fused(f, weights_, mu, gamma_, theta, tol);
            if (!candidate) {
                continue;
            }
            const Eigen::VectorXd r = stationarity(f, weights_, mu, gamma_, *candidate);
            const double kkt_tol = tolerance_for(options_.kkt_tolerance, f, *candidate, mu, gamma_, weights_);
            if (r.cwiseAbs().maxCoeff() <= kkt_tol) {
                return candidate;
            }
        }
        return std::nullopt;
    };

    for (int sweep = 1; sweep <= options_.max_sweeps; ++sweep) {
        double move = 0.0;
        for (std::size_t r = 0; r < fused_rows_.size(); ++r) {
            const FusedRow& row = fused_rows_[r];
            const double next = std::clamp(u_pair[r] + (theta(row.k) - theta(row.l)) / row.coef, -1.0, 1.0);
            const double step = 0.5 * row.coef * (next - u_pair[r]);
            if (step != 0.0) {
                u_pair[r] = next;
                theta(row.k) -= step;
                theta(row.l) += step;
                move = std::max(move, std::abs(step));
            }
        }
        if (mu > 0.0) {
            for (Index k = 0; k < k_count; ++k) {
                const auto kk = static_cast<std::size_t>(k);
                const double next = std::clamp(u_abs[kk] + 2.0 * theta(k) / mu, -1.0, 1.0);
                const double step = 0.5 * mu * (next - u_abs[kk]);
                if (step != 0.0) {
                    u_abs[kk] = next;
                    theta(k) -= step;
                    move = std::max(move, std::abs(step));
                }
            }
        }
        sol.sweeps = sweep;
        if (sweep <= 16 || sweep % 8 == 0 || move == 0.0) {
            if (auto polished = try_polish(move)) {
                return finish(std::move(*polished), true);
            }
        }
        if (move == 0.0) {
            break;
        }
    }
    const Eigen::VectorXd r = stationarity(f, weights_, mu, gamma_, theta);
    const bool ok = r.cwiseAbs().maxCoeff() <= tolerance_for(options_.kkt_tolerance, f, theta, mu, gamma_, weights_);
    return finish(std::move(theta), ok);
}

CoordinateSolution solve_coordinate_q2(const CoordinateProblem& problem, const SolverOptions& options) {
    if (problem.q() != 2) {
        throw InvalidArgument("solve_coordinate_q2 needs a q = 2 weight graph");
    }
    check_inputs(problem.f, problem.weights, problem.mu, problem.gamma);
    return CoordinateSolver(problem.weights, problem.gamma, options).solve(problem.f, problem.mu);
}

CoordinateSolution solve_coordinate_q1(const CoordinateProblem& problem, const SolverOptions& options) {
    if (problem.q() != 1) {
        throw InvalidArgument("solve_coordinate_q1 needs a q = 1 weight graph");
    }
    check_inputs(problem.f, problem.weights, problem.mu, problem.gamma);
    return CoordinateSolver(problem.weights, problem.gamma, options).solve(problem.f, problem.mu);
}

CoordinateSolution solve_coordinate(const CoordinateProblem& problem, const SolverOptions& options) {
    return problem.q() == 2 ? solve_coordinate_q2(problem, options) : solve_coordinate_q1(problem, options);
}

}  // namespace svgmrf
