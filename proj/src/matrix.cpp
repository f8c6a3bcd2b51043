#include "atdl/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "atdl/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace atdl {

namespace {

[[noreturn]] void throw_shape(const char *op, std::size_t ar, std::size_t ac, std::size_t br,
                              std::size_t bc) {
    std::ostringstream os;
    os << op << ": incompatible shapes " << ar << "x" << ac << " and " << br << "x" << bc;
    throw ShapeError(os.str());
}

} // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols) {
        std::ostringstream os;
        os << "matrix: data length " << data_.size() << " != " << rows << "x" << cols;
        throw ShapeError(os.str());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>> &rows) {
    if (rows.empty()) return Matrix();
    Matrix m(rows.size(), rows[0].size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != m.cols_)
            throw ShapeError("from_rows: ragged row " + std::to_string(r));
        std::copy(rows[r].begin(), rows[r].end(), m.data_.begin() + r * m.cols_);
    }
    return m;
}

std::vector<double> Matrix::row_vec(std::size_t r) const {
    return {data_.begin() + r * cols_, data_.begin() + (r + 1) * cols_};
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
}

Matrix &Matrix::operator+=(const Matrix &other) {
    if (rows_ != other.rows_ || cols_ != other.cols_)
        throw_shape("add", rows_, cols_, other.rows_, other.cols_);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Matrix &Matrix::operator-=(const Matrix &other) {
    if (rows_ != other.rows_ || cols_ != other.cols_)
        throw_shape("sub", rows_, cols_, other.rows_, other.cols_);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

Matrix &Matrix::operator*=(double s) {
    for (double &v : data_) v *= s;
    return *this;
}

bool Matrix::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double Matrix::max_abs_diff(const Matrix &a, const Matrix &b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_)
        throw_shape("max_abs_diff", a.rows_, a.cols_, b.rows_, b.cols_);
    double m = 0.0;
    for (std::size_t i = 0; i < a.data_.size(); ++i)
        m = std::max(m, std::abs(a.data_[i] - b.data_[i]));
    return m;
}

Matrix matmul(const Matrix &a, const Matrix &b) {
    if (a.cols() != b.rows()) throw_shape("matmul", a.rows(), a.cols(), b.rows(), b.cols());
    Matrix out(a.rows(), b.cols());
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    const double *pa = a.data();
    const double *pb = b.data();
    double *po = out.data();
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (n * k * m > 262144)
#endif
    for (long long ri = 0; ri < static_cast<long long>(n); ++ri) {
        const auto r = static_cast<std::size_t>(ri);
        double *orow = po + r * m;
        const double *arow = pa + r * k;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double av = arow[kk];
            const double *brow = pb + kk * m;
            for (std::size_t c = 0; c < m; ++c) orow[c] += av * brow[c];
        }
    }
    return out;
}

Matrix matmul_tn(const Matrix &a, const Matrix &b) {
    if (a.rows() != b.rows()) throw_shape("matmul_tn", a.cols(), a.rows(), b.rows(), b.cols());
    Matrix out(a.cols(), b.cols());
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    const double *pa = a.data();
    const double *pb = b.data();
    double *po = out.data();
    for (std::size_t i = 0; i < n; ++i) {
        const double *arow = pa + i * k;
        const double *brow = pb + i * m;
        for (std::size_t r = 0; r < k; ++r) {
            const double av = arow[r];
            double *orow = po + r * m;
            for (std::size_t c = 0; c < m; ++c) orow[c] += av * brow[c];
        }
    }
    return out;
}

Matrix matmul_nt(const Matrix &a, const Matrix &b) {
    if (a.cols() != b.cols()) throw_shape("matmul_nt", a.rows(), a.cols(), b.cols(), b.rows());
    Matrix out(a.rows(), b.rows());
    const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
    const double *pa = a.data();
    const double *pb = b.data();
    double *po = out.data();
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (n * k * m > 262144)
#endif
    for (long long ri = 0; ri < static_cast<long long>(n); ++ri) {
        const auto r = static_cast<std::size_t>(ri);
        const double *arow = pa + r * k;
        double *orow = po + r * m;
        for (std::size_t c = 0; c < m; ++c) {
            const double *brow = pb + c * k;
            double acc = 0.0;
            for (std::size_t kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
            orow[c] = acc;
        }
    }
    return out;
}

Matrix operator*(const Matrix &a, const Matrix &b) { return matmul(a, b); }

Matrix operator+(Matrix a, const Matrix &b) {
    a += b;
    return a;
}

Matrix operator-(Matrix a, const Matrix &b) {
    a -= b;
    return a;
}

Matrix operator*(Matrix a, double s) {
    a *= s;
    return a;
}

} // namespace atdl
