#ifndef ATDL_STATS_HPP
#define ATDL_STATS_HPP

#include <cstddef>
#include <vector>

#include "atdl/matrix.hpp"

namespace atdl {

/// Eigendecomposition of a symmetric matrix: a = v * diag(values) * v^T,
/// values descending, column k of `vectors` the matching unit eigenvector.
struct EigenDecomposition {
    std::vector<double> values;
    Matrix vectors;
};

/// Cyclic Jacobi rotations. Converges when the off-diagonal Frobenius norm
/// falls below 1e-12 relative to the matrix norm; at most 100 sweeps.
EigenDecomposition jacobi_eigen(const Matrix &a);

/// Population covariance (1/N) * sum (x - mean)(x - mean)^T of the sample rows.
Matrix covariance(const Matrix &samples, const std::vector<double> &mean);

double mean_of(const std::vector<double> &v);

/// Column means of a matrix.
std::vector<double> column_means(const Matrix &m);

/// Pearson correlation coefficient. Throws UndefinedCorrelationError when
/// either sequence is constant.
double pearson(const std::vector<double> &d, const std::vector<double> &t);

/// Two-sided p-value of a Pearson coefficient under the null, via the exact
/// t-transform with n-2 degrees of freedom.
double pearson_p_value(double r, std::size_t n);

struct PcaModel {
    std::vector<double> mean;
    Matrix components;                      // one component per row
    std::vector<double> explained_variance; // descending
};

struct PcaFit {
    PcaModel model;
    std::size_t retained_dims = 0;
};

/// PCA of the rows of x. retained_dims is the smallest k whose cumulative
/// explained-variance ratio reaches `energy`. Zero-variance input yields
/// retained_dims = 0 with no components.
PcaFit fit_pca(const Matrix &x, double energy);

/// Rows of x centered and projected onto the first k components.
Matrix pca_project(const PcaModel &model, const Matrix &x, std::size_t k);

/// Back-projection from component space to the original coordinates.
Matrix pca_reconstruct(const PcaModel &model, const Matrix &projected);

/// Regularized incomplete beta function I_x(a, b).
double incomplete_beta(double a, double b, double x);

} // namespace atdl

#endif
