#include "svgmrf/error.hpp"
#include "svgmrf/pairs.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace svgmrf;

namespace {

Eigen::MatrixXd random_weights(Index K, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 3.0);
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(K, K);
    for (Index k = 0; k < K; ++k) {
        for (Index l = k + 1; l < K; ++l) {
            W(k, l) = W(l, k) = u(rng);
        }
    }
    return W;
}

double direct_penalty(const Eigen::MatrixXd& W, const Eigen::VectorXd& theta, int q) {
    double s = 0.0;
    for (Index k = 0; k < theta.size(); ++k) {
        for (Index l = k + 1; l < theta.size(); ++l) {
            s += W(k, l) * std::pow(std::abs(theta(k) - theta(l)), q);
        }
    }
    return s;
}

}  // namespace

TEST_CASE("labeling of small cluster counts") {
    CHECK(make_labeling(2).label(0, 1) == 0);
    CHECK(make_labeling(2).pair_count() == 1);
    const PairLabeling three = make_labeling(3);
    CHECK(three.label(0, 1) == 0);
    CHECK(three.label(0, 2) == 1);
    CHECK(three.label(1, 2) == 2);
    CHECK(make_labeling(1).pair_count() == 0);
}

TEST_CASE("labeling of K = 5 agrees with lexicographic enumeration") {
    const PairLabeling lab = make_labeling(5);
    Index expected = 0;
    for (Index k = 0; k < 5; ++k) {
        for (Index l = k + 1; l < 5; ++l) {
            CHECK(lab.label(k, l) == expected);
            ++expected;
        }
    }
    CHECK(lab.label(1, 3) == 5);
}

TEST_CASE("labeling rejects bad input") {
    CHECK_THROWS_AS(make_labeling(0), InvalidArgument);
    const PairLabeling lab = make_labeling(4);
    CHECK_THROWS_AS(lab.label(2, 2), InvalidArgument);
    CHECK_THROWS_AS(lab.label(0, 4), InvalidArgument);
    CHECK_THROWS_AS(lab.pair(6), InvalidArgument);
}

TEST_CASE("labeling round trip for every K up to 50") {
    for (Index K = 1; K <= 50; ++K) {
        const PairLabeling lab = make_labeling(K);
        CHECK(lab.pair_count() == K * (K - 1) / 2);
        std::vector<bool> seen(static_cast<std::size_t>(lab.pair_count()), false);
        for (Index k = 0; k < K; ++k) {
            for (Index l = k + 1; l < K; ++l) {
                const Index m = lab.label(k, l);
                REQUIRE(m >= 0);
                REQUIRE(m < lab.pair_count());
                CHECK_FALSE(seen[static_cast<std::size_t>(m)]);
                seen[static_cast<std::size_t>(m)] = true;
                CHECK(lab.pair(m) == std::make_pair(k, l));
            }
        }
    }
}

TEST_CASE("incidence matrices") {
    Eigen::MatrixXd a2(1, 2);
    a2 << 1, -1;
    CHECK(build_incidence(make_labeling(2)) == a2);
    Eigen::MatrixXd a3(3, 3);
    a3 << 1, -1, 0, 1, 0, -1, 0, 1, -1;
    CHECK(build_incidence(make_labeling(3)) == a3);

    const Eigen::MatrixXd a = build_incidence(make_labeling(6));
    for (Index r = 0; r < a.rows(); ++r) {
        CHECK((a.row(r).array() == 1.0).count() == 1);
        CHECK((a.row(r).array() == -1.0).count() == 1);
        CHECK((a.row(r).array() == 0.0).count() == 4);
    }
}

TEST_CASE("incidence l1 norm is the sum of pairwise gaps") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n;
    const Eigen::MatrixXd a = build_incidence(make_labeling(4));
    const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(4, 4);
    for (int t = 0; t < 20; ++t) {
        Eigen::VectorXd theta(4);
        for (Index k = 0; k < 4; ++k) {
            theta(k) = n(rng);
        }
        CHECK((a * theta).lpNorm<1>() == doctest::Approx(direct_penalty(ones, theta, 1)).epsilon(1e-14));
    }
}

TEST_CASE("weight diagonal") {
    const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(4, 4);
    const Eigen::VectorXd g = build_weight_diag(ones, make_labeling(4), 2);
    CHECK(g.isOnes(0.0));

    Eigen::MatrixXd w(2, 2);
    w << 0, 4, 4, 0;
    const WeightGraph graph(w, 2);
    CHECK(graph.weight_diag()(0) == 2.0);
    Eigen::VectorXd theta(2);
    theta << 1.5, -0.25;
    CHECK(graph.fusion_penalty(theta) == doctest::Approx(4.0 * 1.75 * 1.75));

    std::mt19937_64 rng(3);
    std::normal_distribution<double> n;
    for (int t = 0; t < 50; ++t) {
        const Eigen::MatrixXd W = random_weights(6, rng);
        const WeightGraph g1(W, 1);
        Eigen::VectorXd th(6);
        for (Index k = 0; k < 6; ++k) {
            th(k) = n(rng);
        }
        const double via_ga = (g1.weight_diag().asDiagonal() * g1.incidence() * th).lpNorm<1>();
        CHECK(std::abs(via_ga - direct_penalty(W, th, 1)) <= 1e-12 * std::max(1.0, direct_penalty(W, th, 1)));
    }
}

TEST_CASE("fusion penalty through G and A matches the double sum for both q") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n;
    for (int q : {1, 2}) {
        for (int t = 0; t < 100; ++t) {
            const Index K = 2 + t % 9;
            const Eigen::MatrixXd W = random_weights(K, rng);
            const WeightGraph graph(W, q);
            Eigen::VectorXd th(K);
            for (Index k = 0; k < K; ++k) {
                th(k) = n(rng);
            }
            const double expected = direct_penalty(W, th, q);
            const Eigen::VectorXd ga = graph.weight_diag().asDiagonal() * graph.incidence() * th;
            const double via_ga = q == 1 ? ga.lpNorm<1>() : ga.squaredNorm();
            CHECK(std::abs(via_ga - expected) <= 1e-12 * std::max(1.0, expected));
            CHECK(std::abs(graph.fusion_penalty(th) - expected) <= 1e-12 * std::max(1.0, expected));
        }
    }
}

TEST_CASE("laplacian equals A^T G^T G A") {
    std::mt19937_64 rng(5);
    const Eigen::MatrixXd W = random_weights(5, rng);
    const WeightGraph graph(W, 2);
    const Eigen::MatrixXd ga = graph.weight_diag().asDiagonal() * graph.incidence();
    CHECK((graph.laplacian() - ga.transpose() * ga).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("weight graph validation") {
    Eigen::MatrixXd neg(2, 2);
    neg << 0, -1, -1, 0;
    CHECK_THROWS_AS(WeightGraph(neg, 1), InvalidArgument);
    Eigen::MatrixXd asym(2, 2);
    asym << 0, 1, 2, 0;
    CHECK_THROWS_AS(WeightGraph(asym, 1), InvalidArgument);
    CHECK_THROWS_AS(WeightGraph(Eigen::MatrixXd::Ones(2, 3), 1), InvalidArgument);
    CHECK_THROWS_AS(WeightGraph(Eigen::MatrixXd::Ones(2, 2), 3), InvalidArgument);

    Eigen::MatrixXd diag_set = Eigen::MatrixXd::Ones(3, 3) * 2.0;
    const WeightGraph g(diag_set, 2);
    CHECK(g.weights().diagonal().isZero(0.0));
    CHECK(g.max_weight() == 2.0);
}

TEST_CASE("zero-weight pairs keep their incidence row") {
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(3, 3);
    W(0, 1) = W(1, 0) = 1.0;
    const WeightGraph g(W, 1);
    CHECK(g.incidence().rows() == 3);
    CHECK(g.weight_diag()(1) == 0.0);
    CHECK(g.weight_diag()(2) == 0.0);
}
