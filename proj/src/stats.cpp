#include "atdl/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "atdl/errors.hpp"

namespace atdl {

namespace {

double off_diagonal_norm(const Matrix &a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
}

double frobenius_norm(const Matrix &a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
}

} // namespace

EigenDecomposition jacobi_eigen(const Matrix &input) {
    if (input.rows() != input.cols())
        throw ShapeError("jacobi_eigen: matrix is " + std::to_string(input.rows()) + "x" +
                         std::to_string(input.cols()) + ", expected square");
    const std::size_t n = input.rows();
    Matrix a = input;
    Matrix v = Matrix::identity(n);

    const double tol = 1e-12 * std::max(1.0, frobenius_norm(a));
    constexpr int kMaxSweeps = 100;

    for (int sweep = 0; sweep < kMaxSweeps && off_diagonal_norm(a) > tol; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= tol / (n * n + 1.0)) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                double t = 1.0 / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
                if (theta < 0.0) t = -t;
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;

                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

    EigenDecomposition out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = a(order[k], order[k]);
        for (std::size_t r = 0; r < n; ++r) out.vectors(r, k) = v(r, order[k]);
    }
    return out;
}

Matrix covariance(const Matrix &samples, const std::vector<double> &mean) {
    if (samples.rows() < 1) throw ArgumentError("covariance: need at least one sample");
    if (mean.size() != samples.cols()) {
        std::ostringstream os;
        os << "covariance: mean length " << mean.size() << " != feature count "
           << samples.cols();
        throw ShapeError(os.str());
    }
    const std::size_t n = samples.rows(), d = samples.cols();
    Matrix cov(d, d);
    std::vector<double> centered(d);
    for (std::size_t r = 0; r < n; ++r) {
        const auto row = samples.row(r);
        for (std::size_t j = 0; j < d; ++j) centered[j] = row[j] - mean[j];
        for (std::size_t i = 0; i < d; ++i) {
            const double ci = centered[i];
            for (std::size_t j = i; j < d; ++j) cov(i, j) += ci * centered[j];
        }
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) {
            cov(i, j) *= inv_n;
            cov(j, i) = cov(i, j);
        }
    return cov;
}

double mean_of(const std::vector<double> &v) {
    if (v.empty()) throw ArgumentError("mean_of: empty vector");
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::vector<double> column_means(const Matrix &m) {
    std::vector<double> mu(m.cols(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto row = m.row(r);
        for (std::size_t c = 0; c < m.cols(); ++c) mu[c] += row[c];
    }
    if (m.rows() > 0)
        for (double &v : mu) v /= static_cast<double>(m.rows());
    return mu;
}

double pearson(const std::vector<double> &d, const std::vector<double> &t) {
    if (d.size() != t.size())
        throw ArgumentError("pearson: length mismatch " + std::to_string(d.size()) + " vs " +
                            std::to_string(t.size()));
    if (d.size() < 2) throw ArgumentError("pearson: need at least two points");
    const double dbar = mean_of(d), tbar = mean_of(t);
    double num = 0.0, dd = 0.0, tt = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double a = d[i] - dbar, b = t[i] - tbar;
        num += a * b;
        dd += a * a;
        tt += b * b;
    }
    if (dd == 0.0 || tt == 0.0)
        throw UndefinedCorrelationError("pearson: constant sequence has no defined correlation");
    return std::clamp(num / std::sqrt(dd * tt), -1.0, 1.0);
}

double pearson_p_value(double r, std::size_t n) {
    if (n < 3) throw ArgumentError("pearson_p_value: need at least three points");
    const double dof = static_cast<double>(n - 2);
    const double denom = 1.0 - r * r;
    if (denom <= 0.0) return 0.0;
    const double t2 = r * r * dof / denom;
    return incomplete_beta(dof / 2.0, 0.5, dof / (dof + t2));
}

PcaFit fit_pca(const Matrix &x, double energy) {
    if (x.rows() < 2) throw ArgumentError("fit_pca: need at least two samples");
    if (!(energy > 0.0 && energy <= 1.0))
        throw ArgumentError("fit_pca: energy must lie in (0, 1]");

    PcaFit fit;
    fit.model.mean = column_means(x);
    const Matrix cov = covariance(x, fit.model.mean);

    double total = 0.0;
    for (std::size_t i = 0; i < cov.rows(); ++i) total += cov(i, i);
    if (total <= 0.0) {
        // Zero-variance input: nothing to retain.
        fit.model.components = Matrix(0, x.cols());
        fit.retained_dims = 0;
        return fit;
    }

    EigenDecomposition eig = jacobi_eigen(cov);
    const std::size_t d = cov.rows();
    fit.model.components = Matrix(d, d);
    fit.model.explained_variance.resize(d);
    for (std::size_t k = 0; k < d; ++k) {
        fit.model.explained_variance[k] = std::max(0.0, eig.values[k]);
        for (std::size_t j = 0; j < d; ++j) fit.model.components(k, j) = eig.vectors(j, k);
    }

    const double sum =
        std::accumulate(fit.model.explained_variance.begin(), fit.model.explained_variance.end(), 0.0);
    double acc = 0.0;
    fit.retained_dims = d;
    for (std::size_t k = 0; k < d; ++k) {
        acc += fit.model.explained_variance[k];
        if (acc >= energy * sum) {
            fit.retained_dims = k + 1;
            break;
        }
    }
    return fit;
}

Matrix pca_project(const PcaModel &model, const Matrix &x, std::size_t k) {
    if (k > model.components.rows())
        throw ArgumentError("pca_project: only " + std::to_string(model.components.rows()) +
                            " components available");
    if (x.cols() != model.mean.size())
        throw ShapeError("pca_project: feature count " + std::to_string(x.cols()) +
                         " != model dimension " + std::to_string(model.mean.size()));
    Matrix centered = x;
    for (std::size_t r = 0; r < centered.rows(); ++r) {
        auto row = centered.row(r);
        for (std::size_t c = 0; c < centered.cols(); ++c) row[c] -= model.mean[c];
    }
    Matrix basis(k, model.components.cols());
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < basis.cols(); ++j) basis(i, j) = model.components(i, j);
    return matmul_nt(centered, basis);
}

Matrix pca_reconstruct(const PcaModel &model, const Matrix &projected) {
    const std::size_t k = projected.cols();
    Matrix basis(k, model.components.cols());
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < basis.cols(); ++j) basis(i, j) = model.components(i, j);
    Matrix out = matmul(projected, basis);
    for (std::size_t r = 0; r < out.rows(); ++r) {
        auto row = out.row(r);
        for (std::size_t c = 0; c < out.cols(); ++c) row[c] += model.mean[c];
    }
    return out;
}

namespace {

// Continued-fraction core of the incomplete beta (Lentz's method).
double beta_cf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16, kTiny = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

} // namespace

double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log(1.0 - x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

} // namespace atdl
