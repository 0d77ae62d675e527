#include "svgmrf/covariance.hpp"
#include "svgmrf/error.hpp"
#include "svgmrf/synthgen.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace svgmrf;
using Eigen::Index;

namespace {

Eigen::MatrixXd mat2(double a, double b, double c, double d) {
    Eigen::MatrixXd m(2, 2);
    m << a, b, c, d;
    return m;
}

Eigen::MatrixXd random_symmetric(Index d, std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    Eigen::MatrixXd m(d, d);
    for (Index j = 0; j < d; ++j) {
        for (Index i = 0; i <= j; ++i) {
            m(i, j) = m(j, i) = n(rng);
        }
    }
    return m;
}

}  // namespace

TEST_CASE("sample covariance of small samples") {
    Eigen::MatrixXd one(1, 2);
    one << 1, 2;
    CHECK(sample_covariance(one) == mat2(1, 2, 2, 4));

    Eigen::MatrixXd two(2, 2);
    two << 1, 0, -1, 0;
    CHECK(sample_covariance(two) == mat2(1, 0, 0, 0));

    CHECK_THROWS_AS(sample_covariance(Eigen::MatrixXd(0, 3)), InvalidArgument);
}

TEST_CASE("sample covariance converges to the true covariance") {
    Rng rng(2024);
    std::normal_distribution<double> n;
    Eigen::MatrixXd x(10000, 2);
    for (Index i = 0; i < x.rows(); ++i) {
        x(i, 0) = std::sqrt(2.0) * n(rng);
        x(i, 1) = std::sqrt(3.0) * n(rng);
    }
    const Eigen::MatrixXd s = sample_covariance(x);
    CHECK((s - mat2(2, 0, 0, 3)).cwiseAbs().maxCoeff() <= 0.15);
    CHECK((s - s.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(s).eigenvalues().minCoeff();
    CHECK(min_eig >= -1e-9 * s.norm());
}

TEST_CASE("centering removes the sample mean") {
    Eigen::MatrixXd x(2, 1);
    x << 3, 5;
    CHECK(sample_covariance(x)(0, 0) == doctest::Approx(17.0));
    CHECK(sample_covariance(x, true)(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("cluster dataset validation") {
    CHECK_THROWS_AS(ClusterDataset({}), InvalidArgument);
    CHECK_THROWS_AS(ClusterDataset({Eigen::MatrixXd::Ones(3, 2), Eigen::MatrixXd::Ones(3, 3)}), InvalidArgument);
    CHECK_THROWS_AS(ClusterDataset({Eigen::MatrixXd(0, 2)}), InvalidArgument);
    Eigen::MatrixXd bad = Eigen::MatrixXd::Ones(2, 2);
    bad(1, 1) = std::nan("");
    CHECK_THROWS_AS(ClusterDataset({bad}), InvalidArgument);
    const ClusterDataset ok({Eigen::MatrixXd::Ones(3, 2), Eigen::MatrixXd::Ones(5, 2)});
    CHECK(ok.min_sample_count() == 3);
    CHECK(ok.sample_counts() == std::vector<Index>{3, 5});
}

TEST_CASE("soft thresholding examples") {
    const Eigen::MatrixXd m = mat2(3, 0.5, 0.5, 2);
    CHECK(soft_threshold(m, 0.0) == m);
    CHECK(soft_threshold(m, 0.7) == mat2(3, 0, 0, 2));
    const Eigen::MatrixXd out = soft_threshold(mat2(3, -1.2, -1.2, 2), 0.7);
    CHECK(out(0, 1) == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(out(1, 0) == out(0, 1));
    CHECK(out(0, 0) == 3.0);
    CHECK_THROWS_AS(soft_threshold(m, -0.1), InvalidArgument);
}

TEST_CASE("soft thresholding is a contraction and composes additively") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 50; ++t) {
        const Eigen::MatrixXd m = random_symmetric(6, rng);
        const double nu1 = u(rng);
        const double nu2 = u(rng);
        const Eigen::MatrixXd s1 = soft_threshold(m, nu1);
        const Eigen::MatrixXd s12 = soft_threshold(s1, nu2);
        const Eigen::MatrixXd direct = soft_threshold(m, nu1 + nu2);
        for (Index i = 0; i < 6; ++i) {
            CHECK(s1(i, i) == m(i, i));
            for (Index j = 0; j < 6; ++j) {
                if (i != j) {
                    CHECK(std::abs(s1(i, j)) <= std::abs(m(i, j)));
                    CHECK(std::abs(s1(i, j) - m(i, j)) <= nu1 + 1e-15);
                    CHECK(s12(i, j) == doctest::Approx(direct(i, j)).epsilon(1e-12));
                }
            }
        }
    }
}

TEST_CASE("backward mapping examples") {
    const BackwardMapping id = backward_mapping(Eigen::MatrixXd::Identity(3, 3), 0.4);
    CHECK((id.matrix - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK(id.nu == 0.4);

    const BackwardMapping diag = backward_mapping(mat2(2, 0.3, 0.3, 2), 0.3);
    CHECK((diag.matrix - mat2(0.5, 0, 0, 0.5)).cwiseAbs().maxCoeff() <= 1e-15);

    // Closed-form 2 x 2 inverse of [[2, 0.5], [0.5, 1]].
    const double det = 2.0 * 1.0 - 0.5 * 0.5;
    const Eigen::MatrixXd expected = mat2(1.0 / det, -0.5 / det, -0.5 / det, 2.0 / det);
    const BackwardMapping two = backward_mapping(mat2(2, 0.8, 0.8, 1), 0.3);
    CHECK((two.matrix - expected).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("singular backward mapping carries cluster and threshold") {
    const Eigen::MatrixXd rank_one = mat2(1, 1, 1, 1);
    try {
        backward_mapping(rank_one, 0.0, 3);
        FAIL("expected an exception");
    } catch (const SingularBackwardMapping& e) {
        CHECK(e.cluster() == 3);
        CHECK(e.nu() == 0.0);
    }
    CHECK_NOTHROW(backward_mapping(rank_one, 0.5, 3));
}

TEST_CASE("backward mapping inverts the thresholded covariance") {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> n;
    for (int t = 0; t < 20; ++t) {
        Eigen::MatrixXd x(40, 8);
        for (Index i = 0; i < x.rows(); ++i) {
            for (Index j = 0; j < x.cols(); ++j) {
                x(i, j) = n(rng);
            }
        }
        const Eigen::MatrixXd s = sample_covariance(x);
        const double nu = 0.05 * (t % 4);
        const BackwardMapping f = backward_mapping(s, nu);
        CHECK((f.matrix - f.matrix.transpose()).cwiseAbs().maxCoeff() == 0.0);
        const Eigen::MatrixXd prod = f.matrix * soft_threshold(s, nu);
        const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(8, 8);
        CHECK((prod - eye).norm() / eye.norm() <= 1e-8);
    }
}

TEST_CASE("parallel backward mappings equal serial ones") {
    std::mt19937_64 rng(1);
    std::vector<Eigen::MatrixXd> covs;
    for (int k = 0; k < 5; ++k) {
        Eigen::MatrixXd a = random_symmetric(6, rng);
        covs.push_back(a * a.transpose() + Eigen::MatrixXd::Identity(6, 6));
    }
    const std::vector<double> nus{0.1, 0.2, 0.0, 0.3, 0.05};
    const auto serial = backward_mappings(covs, nus, kDefaultConditionCap, 1);
    const auto parallel = backward_mappings(covs, nus, kDefaultConditionCap, 4);
    for (std::size_t k = 0; k < covs.size(); ++k) {
        CHECK(serial[k].matrix == parallel[k].matrix);
    }
    CHECK_THROWS_AS(backward_mappings(covs, {0.1}, kDefaultConditionCap, 1), InvalidArgument);
}

TEST_CASE("threshold from constant") {
    CHECK(threshold_from_constant(1.0, std::exp(2.0), 4) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
    CHECK(threshold_from_constant(2.0, 100, 250) == doctest::Approx(0.27150).epsilon(1e-4));
    CHECK(threshold_from_constant(2.0, 100, 250) == doctest::Approx(2.0 * std::sqrt(std::log(100.0) / 250.0)));
    CHECK_THROWS_AS(threshold_from_constant(0.0, 100, 250), InvalidArgument);
    CHECK_THROWS_AS(threshold_from_constant(-1.0, 100, 250), InvalidArgument);
    CHECK_THROWS_AS(threshold_from_constant(1.0, 1, 250), InvalidArgument);
    CHECK_THROWS_AS(threshold_from_constant(1.0, 100, 0), InvalidArgument);
}

TEST_CASE("backward mapping error shrinks with the sample size") {
    SynthConfig cfg;
    cfg.clusters = 1;
    cfg.dimension = 50;
    cfg.modules = 5;
    double previous = std::numeric_limits<double>::infinity();
    for (const Index n : {400, 1600, 6400}) {
        double total = 0.0;
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            cfg.seed = seed;
            cfg.samples = {n};
            const SynthInstance inst = generate(cfg);
            const Eigen::MatrixXd s = sample_covariance(inst.samples[0]);
            const BackwardMapping f = backward_mapping(s, threshold_from_constant(0.5, 50, n));
            total += (f.matrix - inst.truth.precision[0]).cwiseAbs().maxCoeff();
        }
        CHECK(total <= previous);
        previous = total;
    }
}

TEST_CASE("truth constants of a diagonal precision") {
    Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(2, 2);
    theta(0, 0) = 4.0;
    theta(1, 1) = 1.0;
    const TruthConstants c = truth_constants(theta, 0.0);
    CHECK(c.precision_inf_norm == 4.0);
    CHECK(c.covariance_lower == 0.25);
    CHECK(c.covariance_max == doctest::Approx(1.0));
    CHECK(c.weak_sparsity == doctest::Approx(1.0));
}

TEST_CASE("change constants count differing pairs") {
    const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(2, 2);
    Eigen::MatrixXd b = a;
    b(0, 1) = b(1, 0) = 0.5;
    const ChangeConstants c = change_constants({a, a, b});
    CHECK(c.difference_sparsity == 2);
    CHECK(c.smoothness == doctest::Approx(std::sqrt(0.5)));
}
