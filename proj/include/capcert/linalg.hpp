#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

namespace capcert {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

namespace linalg {

/// Relative singular-value threshold used for every rank decision.
inline constexpr double kRankTolerance = 1e-10;

/// Orthonormal basis (as columns) of {v : M v = 0}.
///
/// Rank is decided with sigma_i > rel_tol * sigma_max. A zero matrix (or one
/// with no rows) has the whole space as its kernel.
inline Matrix null_space(const Matrix& m, double rel_tol = kRankTolerance) {
    const Eigen::Index n = m.cols();
    if (m.rows() == 0 || n == 0) {
        return Matrix::Identity(n, n);
    }
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
    const Vector& sigma = svd.singularValues();
    const double smax = sigma.size() > 0 ? sigma(0) : 0.0;
    Eigen::Index rank = 0;
    if (smax > 0.0) {
        for (Eigen::Index i = 0; i < sigma.size(); ++i) {
            if (sigma(i) > rel_tol * smax) ++rank;
        }
    }
    return svd.matrixV().rightCols(n - rank);
}

/// Orthonormal basis (as columns) of the column space of `a`.
inline Matrix range_space(const Matrix& a, double rel_tol = kRankTolerance) {
    if (a.cols() == 0 || a.rows() == 0) return Matrix(a.rows(), 0);
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU);
    const Vector& sigma = svd.singularValues();
    const double smax = sigma.size() > 0 ? sigma(0) : 0.0;
    Eigen::Index rank = 0;
    if (smax > 0.0) {
        for (Eigen::Index i = 0; i < sigma.size(); ++i) {
            if (sigma(i) > rel_tol * smax) ++rank;
        }
    }
    return svd.matrixU().leftCols(rank);
}

/// Orthonormal basis of the orthogonal complement of span(columns of `basis`)
/// inside R^n. `basis` is assumed orthonormal.
inline Matrix orthogonal_complement(const Matrix& basis, Eigen::Index n) {
    if (basis.cols() == 0) return Matrix::Identity(n, n);
    return null_space(basis.transpose());
}

/// Stack row vectors into a matrix.
inline Matrix stack_rows(const std::vector<Vector>& rows, Eigen::Index n) {
    Matrix m(static_cast<Eigen::Index>(rows.size()), n);
    for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    return m;
}

inline std::vector<Vector> columns_of(const Matrix& m) {
    std::vector<Vector> out;
    out.reserve(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.emplace_back(m.col(j));
    return out;
}

/// Flip sign so that the entry of largest magnitude is positive. Gives SVD
/// bases a reproducible orientation.
inline void canonical_sign(Eigen::Ref<Vector> v) {
    Eigen::Index idx = 0;
    v.cwiseAbs().maxCoeff(&idx);
    if (v.size() > 0 && v(idx) < 0) v = -v;
}

}  // namespace linalg
}  // namespace capcert
