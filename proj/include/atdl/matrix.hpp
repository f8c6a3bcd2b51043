#ifndef ATDL_MATRIX_HPP
#define ATDL_MATRIX_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace atdl {

/// Dense row-major matrix of doubles. All training math runs in 64-bit;
/// file formats may downcast on save.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Matrix identity(std::size_t n);
    static Matrix from_rows(const std::vector<std::vector<double>> &rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double &operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double *data() { return data_.data(); }
    const double *data() const { return data_.data(); }
    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
    std::vector<double> row_vec(std::size_t r) const;

    Matrix transposed() const;

    Matrix &operator+=(const Matrix &other);
    Matrix &operator-=(const Matrix &other);
    Matrix &operator*=(double s);

    bool operator==(const Matrix &other) const = default;

    /// True when every entry is finite.
    bool all_finite() const;

    /// Largest |a_ij - b_ij|; shapes must match.
    static double max_abs_diff(const Matrix &a, const Matrix &b);

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Standard product a*b. Throws ShapeError naming both shapes on mismatch.
/// May split output rows across threads; accumulation order per entry is
/// fixed, so results are bit-identical at any thread count.
Matrix matmul(const Matrix &a, const Matrix &b);

/// a^T * b without materializing the transpose.
Matrix matmul_tn(const Matrix &a, const Matrix &b);

/// a * b^T without materializing the transpose.
Matrix matmul_nt(const Matrix &a, const Matrix &b);

Matrix operator*(const Matrix &a, const Matrix &b);
Matrix operator+(Matrix a, const Matrix &b);
Matrix operator-(Matrix a, const Matrix &b);
Matrix operator*(Matrix a, double s);

} // namespace atdl

#endif
