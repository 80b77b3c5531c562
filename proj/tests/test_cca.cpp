#include "slummap/cca.hpp"
#include "slummap/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace slummap;

namespace {

double uniform(Pcg32& rng) { return (rng.next() + 0.5) / 4294967296.0; }

double gaussian(Pcg32& rng) {
    return std::sqrt(-2.0 * std::log(uniform(rng))) * std::cos(2.0 * std::numbers::pi * uniform(rng));
}

Eigen::MatrixXd random_matrix(Pcg32& rng, Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = gaussian(rng);
    return m;
}

/// Squared canonical correlations as the eigenvalues of
/// Cxx^-1 Cxy Cyy^-1 Cyx, via a general (non-symmetric) eigensolver.
std::vector<double> oracle_correlations(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    const Eigen::MatrixXd xc = x.rowwise() - x.colwise().mean();
    const Eigen::MatrixXd yc = y.rowwise() - y.colwise().mean();
    const Eigen::MatrixXd cxx = xc.transpose() * xc;
    const Eigen::MatrixXd cyy = yc.transpose() * yc;
    const Eigen::MatrixXd cxy = xc.transpose() * yc;
    const Eigen::MatrixXd k = cxx.fullPivLu().solve(cxy) * cyy.fullPivLu().solve(cxy.transpose());
    Eigen::EigenSolver<Eigen::MatrixXd> eig(k);
    std::vector<double> rho;
    for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i)
        rho.push_back(std::sqrt(std::max(0.0, eig.eigenvalues()(i).real())));
    std::sort(rho.rbegin(), rho.rend());
    rho.resize(static_cast<std::size_t>(std::min(x.cols(), y.cols())));
    return rho;
}

}  // namespace

TEST_CASE("scalar feature matches the covariance-algebra reference") {
    // x symmetric about 0, class 1 exactly when x > 0.
    const std::vector<double> values{-3, -2, -1, -0.5, 0.5, 1, 2, 3};
    Eigen::MatrixXd x(8, 1);
    std::vector<std::uint8_t> labels;
    for (int i = 0; i < 8; ++i) {
        x(i, 0) = values[static_cast<std::size_t>(i)];
        labels.push_back(values[static_cast<std::size_t>(i)] > 0 ? 1 : 0);
    }
    const auto result = cca_fit(x, one_hot(labels));
    REQUIRE(result.correlations.size() == 1);

    // Explicit covariance algebra: the binary case reduces to |Pearson r|.
    const double mx = x.mean();
    double sxy = 0, sxx = 0, syy = 0;
    const double my = 0.5;
    for (int i = 0; i < 8; ++i) {
        const double dy = (labels[static_cast<std::size_t>(i)] == 0 ? 1.0 : 0.0) - my;
        sxy += (x(i, 0) - mx) * dy;
        sxx += (x(i, 0) - mx) * (x(i, 0) - mx);
        syy += dy * dy;
    }
    const double pearson = std::abs(sxy) / std::sqrt(sxx * syy);
    CHECK(std::abs(result.correlations[0] - pearson) <= 1e-6);
    CHECK(pearson < 1.0);  // step labels are not an affine function of x
}

TEST_CASE("correlation 1 when the feature is the indicator itself") {
    Eigen::MatrixXd x(6, 1);
    x << -1, 1, -1, 1, 1, -1;
    const std::vector<std::uint8_t> labels{0, 1, 0, 1, 1, 0};
    CHECK(std::abs(cca_fit(x, one_hot(labels)).correlations[0] - 1.0) <= 1e-6);
}

TEST_CASE("independent noise has a small leading correlation") {
    Pcg32 rng(8);
    const Eigen::MatrixXd x = random_matrix(rng, 10000, 3);
    std::vector<std::uint8_t> labels(10000);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i % 2 ? 1 : 0;
    const auto shuffle = sample_without_replacement(labels.size(), labels.size(), rng);
    std::vector<std::uint8_t> balanced(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) balanced[i] = labels[shuffle[i]];
    CHECK(cca_fit(x, one_hot(balanced)).correlations[0] < 0.05);
}

TEST_CASE("duplicated column leaves the correlation unchanged") {
    Pcg32 rng(12);
    const Eigen::MatrixXd single = random_matrix(rng, 60, 1);
    std::vector<std::uint8_t> labels(60);
    for (Eigen::Index i = 0; i < 60; ++i) labels[static_cast<std::size_t>(i)] = single(i, 0) + 0.5 * gaussian(rng) > 0;
    Eigen::MatrixXd twice(60, 2);
    twice << single, single;
    const double a = cca_fit(single, one_hot(labels)).correlations[0];
    const double b = cca_fit(twice, one_hot(labels)).correlations[0];
    CHECK(std::abs(a - b) <= 1e-6);
}

TEST_CASE("degenerate inputs") {
    Eigen::MatrixXd constant = Eigen::MatrixXd::Constant(5, 2, 3.0);
    const std::vector<std::uint8_t> mixed{0, 1, 0, 1, 1};
    CHECK_THROWS_AS(cca_fit(constant, one_hot(mixed)), CcaDegenerate);
    Pcg32 rng(1);
    const std::vector<std::uint8_t> single{1, 1, 1, 1, 1};
    CHECK_THROWS_AS(cca_fit(random_matrix(rng, 5, 2), one_hot(single)), CcaDegenerate);
}

TEST_CASE("correlations match the covariance-algebra oracle and stay in [0, 1]") {
    Pcg32 rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        const Eigen::Index n = 20 + rng.below(60);
        const Eigen::Index d = 1 + rng.below(5);
        const Eigen::Index q = 1 + rng.below(3);
        const Eigen::MatrixXd x = random_matrix(rng, n, d);
        Eigen::MatrixXd y = random_matrix(rng, n, q);
        y.col(0) += x.col(0) * (trial % 3);
        const auto result = cca_fit_blocks(x, y);
        const auto want = oracle_correlations(x, y);
        REQUIRE(result.correlations.size() == want.size());
        for (std::size_t c = 0; c < want.size(); ++c) {
            CHECK(result.correlations[c] >= -1e-9);
            CHECK(result.correlations[c] <= 1.0 + 1e-9);
            CHECK(std::abs(result.correlations[c] - want[c]) <= 1e-6);
            if (c > 0) CHECK(result.correlations[c] <= result.correlations[c - 1] + 1e-12);
        }
    }
}

TEST_CASE("canonical directions are unit-variance and oriented") {
    Pcg32 rng(4);
    const Eigen::MatrixXd x = random_matrix(rng, 80, 3);
    std::vector<std::uint8_t> labels(80);
    for (Eigen::Index i = 0; i < 80; ++i) labels[static_cast<std::size_t>(i)] = x(i, 1) - x(i, 2) > 0;
    const Eigen::MatrixXd y = one_hot(labels);
    const auto result = cca_fit(x, y);
    const Eigen::MatrixXd xc = x.rowwise() - x.colwise().mean();
    const Eigen::MatrixXd yc = y.rowwise() - y.colwise().mean();
    const Eigen::MatrixXd cxx = xc.transpose() * xc / 79.0;
    const Eigen::VectorXd a = result.projections.col(0);
    CHECK(std::abs(a.dot(cxx * a) - 1.0) <= 1e-6);
    CHECK(a.dot(xc.transpose() * yc.col(0)) >= 0.0);
}

TEST_CASE("correlations are invariant under invertible transforms of the feature block") {
    Pcg32 rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index n = 40 + rng.below(40);
        const Eigen::Index d = 1 + rng.below(4);
        const Eigen::MatrixXd x = random_matrix(rng, n, d);
        std::vector<std::uint8_t> labels(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = x(i, 0) + gaussian(rng) > 0;
        labels[0] = 0;
        labels[1] = 1;
        Eigen::MatrixXd transform = random_matrix(rng, d, d);
        transform.diagonal().array() += 3.0;
        REQUIRE(std::abs(transform.determinant()) > 1e-3);
        const double before = cca_fit(x, one_hot(labels)).correlations[0];
        const double after = cca_fit(x * transform, one_hot(labels)).correlations[0];
        CHECK(std::abs(before - after) <= 1e-6);
    }
}
