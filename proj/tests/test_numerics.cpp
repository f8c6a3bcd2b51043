#include <doctest.h>

#include <cmath>
#include <numbers>

#include "atdl/errors.hpp"
#include "atdl/matrix.hpp"
#include "atdl/rng.hpp"
#include "atdl/stats.hpp"

using namespace atdl;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng &rng, double lo = -1.0, double hi = 1.0) {
    Matrix m(r, c);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
    return m;
}

// Independent oracle: plain triple loop, no shared code with matmul.
Matrix matmul_oracle(const Matrix &a, const Matrix &b) {
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
            out(i, j) = acc;
        }
    return out;
}

// Closed-form eigenvalues of a symmetric 3x3 via the characteristic cubic.
std::array<double, 3> cubic_eigenvalues(const Matrix &a) {
    const double p1 = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
    if (p1 == 0.0) {
        std::array<double, 3> eig{a(0, 0), a(1, 1), a(2, 2)};
        std::sort(eig.begin(), eig.end(), std::greater<>());
        return eig;
    }
    const double q = (a(0, 0) + a(1, 1) + a(2, 2)) / 3.0;
    const double p2 = (a(0, 0) - q) * (a(0, 0) - q) + (a(1, 1) - q) * (a(1, 1) - q) +
                      (a(2, 2) - q) * (a(2, 2) - q) + 2.0 * p1;
    const double p = std::sqrt(p2 / 6.0);
    Matrix b = a;
    for (int i = 0; i < 3; ++i) b(i, i) -= q;
    b *= (1.0 / p);
    const double detb = b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1)) -
                        b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0)) +
                        b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0));
    const double r = std::clamp(detb / 2.0, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    const double e1 = q + 2.0 * p * std::cos(phi);
    const double e3 = q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
    return {e1, 3.0 * q - e1 - e3, e3};
}

// Eigenvalues of a symmetric 2x2, descending.
std::pair<double, double> eig2x2(double a, double b, double c) {
    const double mean = (a + c) / 2.0;
    const double det = std::sqrt((a - c) * (a - c) / 4.0 + b * b);
    return {mean + det, mean - det};
}

} // namespace

TEST_SUITE_BEGIN("numerics");

TEST_CASE("rng repeats exactly under the same seed") {
    Rng a(1234), b(1234);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c(1235);
    CHECK(Rng(1234).next_u64() != c.next_u64());
}

TEST_CASE("rng uniforms stay in range") {
    Rng rng(7);
    for (int i = 0; i < 1000; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("matmul identity leaves the operand unchanged") {
    Rng rng(1);
    const Matrix m = random_matrix(3, 5, rng);
    const Matrix out = matmul(Matrix::identity(3), m);
    CHECK(Matrix::max_abs_diff(out, m) == 0.0);
}

TEST_CASE("matmul hand-checked 2x2 by 2x1") {
    const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
    const Matrix b = Matrix::from_rows({{1}, {1}});
    const Matrix out = matmul(a, b);
    CHECK(out(0, 0) == doctest::Approx(3.0));
    CHECK(out(1, 0) == doctest::Approx(7.0));
}

TEST_CASE("matmul matches the triple-loop oracle") {
    Rng rng(42);
    const Matrix a = random_matrix(5, 7, rng);
    const Matrix b = random_matrix(7, 2, rng);
    CHECK(Matrix::max_abs_diff(matmul(a, b), matmul_oracle(a, b)) < 1e-12);
}

TEST_CASE("matmul rejects mismatched shapes with both named") {
    const Matrix a(2, 3), b(4, 2);
    try {
        matmul(a, b);
        FAIL("expected ShapeError");
    } catch (const ShapeError &e) {
        const std::string msg = e.what();
        CHECK(msg.find("2x3") != std::string::npos);
        CHECK(msg.find("4x2") != std::string::npos);
    }
}

TEST_CASE("matmul transpose variants agree with explicit transposes") {
    Rng rng(9);
    const Matrix a = random_matrix(6, 4, rng);
    const Matrix b = random_matrix(6, 3, rng);
    CHECK(Matrix::max_abs_diff(matmul_tn(a, b), matmul(a.transposed(), b)) < 1e-12);
    const Matrix c = random_matrix(5, 4, rng);
    CHECK(Matrix::max_abs_diff(matmul_nt(a, c), matmul(a, c.transposed())) < 1e-12);
}

TEST_CASE("matmul associativity on random conformable triples") {
    Rng rng(3);
    for (int trial = 0; trial < 5; ++trial) {
        const Matrix a = random_matrix(4, 6, rng);
        const Matrix b = random_matrix(6, 3, rng);
        const Matrix c = random_matrix(3, 5, rng);
        const Matrix left = matmul(matmul(a, b), c);
        const Matrix right = matmul(a, matmul(b, c));
        double scale = 0.0;
        for (std::size_t i = 0; i < left.size(); ++i)
            scale = std::max(scale, std::abs(left.data()[i]));
        CHECK(Matrix::max_abs_diff(left, right) < 1e-9 * std::max(1.0, scale));
    }
}

TEST_CASE("covariance of a single sample at its mean is zero") {
    const Matrix s = Matrix::from_rows({{1.5, -2.0}});
    const Matrix cov = covariance(s, {1.5, -2.0});
    CHECK(cov(0, 0) == 0.0);
    CHECK(cov(0, 1) == 0.0);
    CHECK(cov(1, 1) == 0.0);
}

TEST_CASE("covariance hand computation") {
    const Matrix s = Matrix::from_rows({{0, 0}, {2, 0}});
    const Matrix cov = covariance(s, {1, 0});
    CHECK(cov(0, 0) == doctest::Approx(1.0));
    CHECK(cov(0, 1) == 0.0);
    CHECK(cov(1, 0) == 0.0);
    CHECK(cov(1, 1) == 0.0);
}

TEST_CASE("covariance is exactly symmetric and positive semidefinite") {
    Rng rng(5);
    const Matrix s = random_matrix(40, 6, rng);
    const Matrix cov = covariance(s, column_means(s));
    CHECK(Matrix::max_abs_diff(cov, cov.transposed()) == 0.0);
    const EigenDecomposition eig = jacobi_eigen(cov);
    for (double v : eig.values) CHECK(v >= -1e-10);
}

TEST_CASE("jacobi reconstructs the input matrix") {
    Rng rng(11);
    const Matrix s = random_matrix(30, 5, rng);
    const Matrix a = covariance(s, column_means(s));
    const EigenDecomposition eig = jacobi_eigen(a);
    Matrix recon(5, 5);
    for (std::size_t k = 0; k < 5; ++k)
        for (std::size_t i = 0; i < 5; ++i)
            for (std::size_t j = 0; j < 5; ++j)
                recon(i, j) += eig.values[k] * eig.vectors(i, k) * eig.vectors(j, k);
    CHECK(Matrix::max_abs_diff(recon, a) < 1e-10);
}

TEST_CASE("pca on a line keeps one dimension") {
    Matrix x(50, 2);
    Rng rng(2);
    for (std::size_t i = 0; i < 50; ++i) {
        const double t = rng.uniform(-1, 1);
        x(i, 0) = t;
        x(i, 1) = 2.0 * t;
    }
    const PcaFit fit = fit_pca(x, 0.995);
    CHECK(fit.retained_dims == 1);
}

TEST_CASE("pca on an isotropic gaussian matches the closed-form 2x2 oracle") {
    Matrix x(2000, 2);
    Rng rng(17);
    for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = rng.gaussian();

    const Matrix cov = covariance(x, column_means(x));
    const auto [l1, l2] = eig2x2(cov(0, 0), cov(0, 1), cov(1, 1));

    const PcaFit low = fit_pca(x, 0.4);
    const PcaFit high = fit_pca(x, 0.95);
    CHECK(low.model.explained_variance[0] == doctest::Approx(l1).epsilon(1e-8));
    CHECK(low.model.explained_variance[1] == doctest::Approx(l2).epsilon(1e-8));

    // With two near-equal variances the first axis carries about half of the
    // energy: enough for 0.4, not for 0.95.
    CHECK(l1 / (l1 + l2) > 0.4);
    CHECK(l1 / (l1 + l2) < 0.95);
    CHECK(low.retained_dims == 1);
    CHECK(high.retained_dims == 2);
}

TEST_CASE("pca eigenvalues match the cubic-root oracle on random 3x3 covariances") {
    Rng rng(23);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix s = random_matrix(60, 3, rng);
        const Matrix cov = covariance(s, column_means(s));
        const auto oracle = cubic_eigenvalues(cov);
        const EigenDecomposition eig = jacobi_eigen(cov);
        for (int k = 0; k < 3; ++k) CHECK(eig.values[k] == doctest::Approx(oracle[k]).epsilon(1e-8));
    }
}

TEST_CASE("pca flags zero-variance input instead of failing") {
    const Matrix x(10, 3, 0.25);
    const PcaFit fit = fit_pca(x, 0.9);
    CHECK(fit.retained_dims == 0);
    CHECK(fit.model.components.rows() == 0);
}

TEST_CASE("pca components are orthonormal") {
    Rng rng(31);
    const Matrix x = random_matrix(100, 6, rng);
    const PcaFit fit = fit_pca(x, 1.0);
    const Matrix &c = fit.model.components;
    for (std::size_t i = 0; i < c.rows(); ++i)
        for (std::size_t j = 0; j < c.rows(); ++j) {
            double dot = 0.0;
            for (std::size_t k = 0; k < c.cols(); ++k) dot += c(i, k) * c(j, k);
            CHECK(std::abs(dot - (i == j ? 1.0 : 0.0)) < 1e-8);
        }
    for (std::size_t i = 0; i + 1 < fit.model.explained_variance.size(); ++i)
        CHECK(fit.model.explained_variance[i] >= fit.model.explained_variance[i + 1]);
}

TEST_CASE("pca project + reconstruct with all components restores the data") {
    Rng rng(37);
    const Matrix x = random_matrix(80, 5, rng);
    const PcaFit fit = fit_pca(x, 1.0);
    const Matrix projected = pca_project(fit.model, x, fit.model.components.rows());
    const Matrix recon = pca_reconstruct(fit.model, projected);
    CHECK(Matrix::max_abs_diff(recon, x) < 1e-8);
}

TEST_CASE("pearson of an exact positive affine image is one") {
    std::vector<double> d{1, 2, 3, 4, 5};
    std::vector<double> t;
    for (double v : d) t.push_back(3.0 * v + 1.0);
    CHECK(pearson(d, t) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pearson of a negation is minus one") {
    std::vector<double> d{0.5, -1.0, 2.0, 0.0};
    std::vector<double> t;
    for (double v : d) t.push_back(-v);
    CHECK(pearson(d, t) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("pearson matches an extended-precision two-pass oracle") {
    Rng rng(41);
    std::vector<double> d, t;
    for (int i = 0; i < 10; ++i) {
        d.push_back(rng.uniform(-5, 5));
        t.push_back(rng.uniform(-5, 5));
    }
    long double db = 0, tb = 0;
    for (int i = 0; i < 10; ++i) {
        db += d[i];
        tb += t[i];
    }
    db /= 10;
    tb /= 10;
    long double num = 0, dd = 0, tt = 0;
    for (int i = 0; i < 10; ++i) {
        num += (static_cast<long double>(d[i]) - db) * (static_cast<long double>(t[i]) - tb);
        dd += (static_cast<long double>(d[i]) - db) * (static_cast<long double>(d[i]) - db);
        tt += (static_cast<long double>(t[i]) - tb) * (static_cast<long double>(t[i]) - tb);
    }
    const double oracle = static_cast<double>(num / std::sqrt(dd * tt));
    CHECK(pearson(d, t) == doctest::Approx(oracle).epsilon(1e-10));
}

TEST_CASE("pearson rejects constant sequences") {
    CHECK_THROWS_AS(pearson({1, 1, 1}, {1, 2, 3}), UndefinedCorrelationError);
}

TEST_CASE("pearson is invariant under positive affine rescaling") {
    Rng rng(43);
    std::vector<double> d, t;
    for (int i = 0; i < 14; ++i) {
        d.push_back(rng.uniform(-2, 2));
        t.push_back(rng.uniform(-2, 2));
    }
    const double base = pearson(d, t);
    std::vector<double> d2;
    for (double v : d) d2.push_back(2.5 * v - 7.0);
    CHECK(pearson(d2, t) == doctest::Approx(base).epsilon(1e-10));
    std::vector<double> t2;
    for (double v : t) t2.push_back(0.03 * v + 100.0);
    CHECK(pearson(d, t2) == doctest::Approx(base).epsilon(1e-10));
}

TEST_CASE("pearson p-value falls with sample size") {
    const double p_small = pearson_p_value(0.5, 10);
    const double p_large = pearson_p_value(0.5, 100);
    CHECK(p_small > p_large);
    CHECK(p_small > 0.0);
    CHECK(p_small < 1.0);
    // r = 0.5, n = 12 is a textbook value: p ~ 0.0981.
    CHECK(pearson_p_value(0.5, 12) == doctest::Approx(0.0981).epsilon(2e-3));
}

TEST_SUITE_END();
