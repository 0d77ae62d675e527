#include "oracles.hpp"
#include "svgmrf/coordinate.hpp"
#include "svgmrf/error.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace svgmrf;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Index>(v.size()));
    Index i = 0;
    for (const double x : v) {
        out(i++) = x;
    }
    return out;
}

CoordinateProblem problem(const Eigen::VectorXd& f, const Eigen::MatrixXd& W, double mu, double gamma, int q) {
    return CoordinateProblem{f, WeightGraph(W, q), mu, gamma};
}

Eigen::MatrixXd ones_weights(Index K) {
    Eigen::MatrixXd W = Eigen::MatrixXd::Ones(K, K);
    W.diagonal().setZero();
    return W;
}

Eigen::VectorXd soft_closed_form(const Eigen::VectorXd& f, double mu) {
    Eigen::VectorXd out(f.size());
    for (Index k = 0; k < f.size(); ++k) {
        const double m = std::max(std::abs(f(k)) - mu / 2.0, 0.0);
        out(k) = f(k) > 0 ? m : -m;
    }
    return out;
}

}  // namespace

TEST_CASE("no penalty returns the input") {
    const Eigen::VectorXd f = vec({0.3, -1.2, 2.5, 0.0});
    for (int q : {1, 2}) {
        const CoordinateSolution s = solve_coordinate(problem(f, ones_weights(4), 0.0, 0.0, q));
        CHECK((s.theta - f).cwiseAbs().maxCoeff() == 0.0);
        CHECK(s.converged);
    }
}

TEST_CASE("separable soft threshold when gamma is zero") {
    const CoordinateSolution s = solve_coordinate_q2(problem(vec({1.0, -0.3}), ones_weights(2), 1.0, 0.0, 2));
    CHECK(s.theta(0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(s.theta(1) == 0.0);
}

TEST_CASE("q = 2 with K = 3 matches a long subgradient run") {
    const Eigen::VectorXd f = vec({1, 2, 3});
    const Eigen::MatrixXd W = ones_weights(3);
    const CoordinateSolution s = solve_coordinate_q2(problem(f, W, 0.2, 0.5, 2));
    const Eigen::VectorXd ref = oracle::subgradient(f, W, 0.2, 0.5, 2, 1000000);
    const double obj_s = oracle::objective(f, W, 0.2, 0.5, 2, s.theta);
    const double obj_ref = oracle::objective(f, W, 0.2, 0.5, 2, ref);
    CHECK(std::abs(obj_s - obj_ref) <= 1e-7);
    CHECK(obj_s <= obj_ref + 1e-12);
}

TEST_CASE("q = 1 scalar case") {
    const CoordinateSolution s = solve_coordinate_q1(problem(vec({2.0}), Eigen::MatrixXd::Zero(1, 1), 1.0, 0.7, 1));
    CHECK(s.theta(0) == doctest::Approx(1.5).epsilon(1e-14));
}

TEST_CASE("q = 1 with K = 2 matches a grid refinement search") {
    const Eigen::VectorXd f = vec({1.0, 0.2});
    const CoordinateSolution s = solve_coordinate_q1(problem(f, ones_weights(2), 0.1, 0.3, 1));
    const Eigen::VectorXd ref = oracle::grid_refine_2d(f, 1.0, 0.1, 0.3, 1);
    CHECK((s.theta - ref).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("non-finite input is rejected") {
    const Eigen::VectorXd f = vec({1.0, std::numeric_limits<double>::quiet_NaN()});
    CHECK_THROWS_AS(solve_coordinate_q2(problem(f, ones_weights(2), 0.1, 0.1, 2)), InvalidArgument);
    CHECK_THROWS_AS(solve_coordinate_q1(problem(f, ones_weights(2), 0.1, 0.1, 1)), InvalidArgument);
    CHECK_THROWS_AS(solve_coordinate(problem(vec({1.0, 2.0}), ones_weights(2), -0.1, 0.1, 2)), InvalidArgument);
    CHECK_THROWS_AS(solve_coordinate(problem(vec({1.0, 2.0}), ones_weights(2), 0.1, -0.1, 1)), InvalidArgument);
    CHECK_THROWS_AS(solve_coordinate_q1(problem(vec({1.0, 2.0}), ones_weights(2), 0.1, 0.1, 2)), InvalidArgument);
}

TEST_CASE("kkt residual examples") {
    const Eigen::VectorXd f = vec({1.3, -0.2, 0.7, -2.0});
    const double mu = 0.6;
    const CoordinateProblem p = problem(f, ones_weights(4), mu, 0.0, 2);
    CHECK(kkt_residual(p, soft_closed_form(f, mu)) <= 1e-12);
    CHECK(kkt_residual(p, f) == doctest::Approx(mu).epsilon(1e-14));

    // The solution has no zero entry, so the gradient slope is 2.
    const Eigen::VectorXd dense_f = vec({1.3, -0.9, 0.7, -2.0});
    const CoordinateProblem dense = problem(dense_f, ones_weights(4), 0.2, 0.0, 2);
    const Eigen::VectorXd opt = solve_coordinate(dense).theta;
    for (const double delta : {1e-3, 1e-4, 1e-5}) {
        Eigen::VectorXd moved = opt;
        moved(2) += delta;
        CHECK(kkt_residual(dense, moved) / delta == doctest::Approx(2.0).epsilon(1e-6));
    }
}

TEST_CASE("kkt residual grows with a perturbation of the solution") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> n;
    for (int q : {1, 2}) {
        for (int t = 0; t < 50; ++t) {
            const oracle::Instance inst = oracle::random_instance(rng, t % 2 == 0);
            const CoordinateProblem p = problem(inst.f, inst.W, inst.mu, inst.gamma, q);
            const Eigen::VectorXd opt = solve_coordinate(p).theta;
            Eigen::VectorXd moved = opt;
            for (Index k = 0; k < moved.size(); ++k) {
                moved(k) += 1e-3 * n(rng);
            }
            CHECK(kkt_residual(p, moved) > kkt_residual(p, opt));
        }
    }
}

TEST_CASE("both solvers agree with independent first-order oracles") {
    std::mt19937_64 rng(101);
    for (int q : {1, 2}) {
        for (int t = 0; t < 300; ++t) {
            const oracle::Instance inst = oracle::random_instance(rng, t % 2 == 0);
            const CoordinateSolution s = solve_coordinate(problem(inst.f, inst.W, inst.mu, inst.gamma, q));
            const Eigen::VectorXd ref = q == 2 ? oracle::fista_q2(inst.f, inst.W, inst.mu, inst.gamma)
                                               : oracle::admm_q1(inst.f, inst.W, inst.mu, inst.gamma);
            CHECK((s.theta - ref).cwiseAbs().maxCoeff() <= 1e-5);
            CHECK(s.kkt_residual <= 1e-8);
            CHECK(s.converged);
            CHECK(s.duality_gap <= 1e-9);
        }
    }
}

TEST_CASE("reported residual equals a fresh evaluation") {
    std::mt19937_64 rng(55);
    for (int q : {1, 2}) {
        for (int t = 0; t < 200; ++t) {
            const oracle::Instance inst = oracle::random_instance(rng, t % 3 == 0);
            const CoordinateProblem p = problem(inst.f, inst.W, inst.mu, inst.gamma, q);
            const CoordinateSolution s = solve_coordinate(p);
            CHECK(s.kkt_residual == kkt_residual(p, s.theta));
        }
    }
}

TEST_CASE("shrinkage is monotone in mu") {
    std::mt19937_64 rng(23);
    for (int q : {1, 2}) {
        for (int t = 0; t < 100; ++t) {
            const oracle::Instance inst = oracle::random_instance(rng, t % 2 == 0);
            const CoordinateSolver solver(WeightGraph(inst.W, q), inst.gamma);
            double previous = std::numeric_limits<double>::infinity();
            for (const double mu : {0.0, 0.1, 0.4, 1.0, 2.5}) {
                const double norm = solver.solve(inst.f, mu).theta.lpNorm<1>();
                CHECK(norm <= previous + 1e-9);
                previous = norm;
            }
        }
    }
}

TEST_CASE("large gamma fuses to the mean") {
    const Eigen::VectorXd f = vec({0.4, -1.0, 2.2, 0.9, 0.1});
    const CoordinateSolution s = solve_coordinate_q2(problem(f, ones_weights(5), 0.0, 1e6, 2));
    CHECK((s.theta.array() - f.mean()).abs().maxCoeff() <= 1e-4);
    const CoordinateSolution s1 = solve_coordinate_q1(problem(f, ones_weights(5), 0.0, 1e6, 1));
    CHECK((s1.theta.array() - f.mean()).abs().maxCoeff() <= 1e-9);
}

TEST_CASE("q = 1 output is snapped") {
    std::mt19937_64 rng(77);
    for (int t = 0; t < 300; ++t) {
        const oracle::Instance inst = oracle::random_instance(rng, t % 2 == 0);
        const Eigen::VectorXd theta = solve_coordinate_q1(problem(inst.f, inst.W, inst.mu, inst.gamma, 1)).theta;
        for (Index k = 0; k < theta.size(); ++k) {
            CHECK((theta(k) == 0.0 || std::abs(theta(k)) > 1e-8));
            for (Index l = k + 1; l < theta.size(); ++l) {
                CHECK((theta(k) == theta(l) || std::abs(theta(k) - theta(l)) > 1e-8));
            }
        }
    }
}

TEST_CASE("snap_fused") {
    const Eigen::VectorXd snapped = snap_fused(vec({1e-9, 0.5, 0.5 + 4e-9, -2.0}), 1e-8);
    CHECK(snapped(0) == 0.0);
    CHECK(snapped(1) == snapped(2));
    CHECK(snapped(1) == doctest::Approx(0.5 + 2e-9).epsilon(1e-15));
    CHECK(snapped(3) == -2.0);
}

TEST_CASE("q = 1 with mu = 0 is solved directly") {
    const Eigen::VectorXd f = vec({1.0, 0.0, -1.0});
    const CoordinateSolution s = solve_coordinate_q1(problem(f, ones_weights(3), 0.0, 0.2, 1));
    const Eigen::VectorXd ref = oracle::admm_q1(f, ones_weights(3), 0.0, 0.2);
    CHECK((s.theta - ref).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(s.kkt_residual <= 1e-9);
}

TEST_CASE("solver object matches the free functions") {
    std::mt19937_64 rng(4);
    for (int q : {1, 2}) {
        const oracle::Instance inst = oracle::random_instance(rng, false);
        const CoordinateSolver solver(WeightGraph(inst.W, q), inst.gamma);
        const CoordinateSolution a = solver.solve(inst.f, inst.mu);
        const CoordinateSolution b = solve_coordinate(problem(inst.f, inst.W, inst.mu, inst.gamma, q));
        CHECK(a.theta == b.theta);
    }
}

TEST_CASE("q = 2 factor satisfies C^T C = I + gamma L") {
    std::mt19937_64 rng(8);
    const oracle::Instance inst = oracle::random_instance(rng, false);
    const WeightGraph graph(inst.W, 2);
    const CoordinateSolver solver(graph, inst.gamma);
    const Eigen::MatrixXd& c = solver.factor();
    const Index K = inst.f.size();
    const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(K, K) + inst.gamma * graph.laplacian();
    CHECK((c.transpose() * c - m).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(c.isUpperTriangular(0.0));
}
