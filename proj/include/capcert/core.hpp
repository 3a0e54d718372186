#pragma once

// Probability primitives and information measures over finite alphabets.
// All logarithms are natural; every quantity is in nats.

#include "capcert/error.hpp"
#include "capcert/linalg.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace capcert {

inline constexpr double kSumTolerance = 1e-12;

/// A point of the probability simplex.
///
/// Entries in [-tol, 0) are treated as rounding noise and clamped to zero;
/// anything more negative, or a total that misses 1 by more than `tol`, is
/// rejected.
class Distribution {
public:
    Distribution() = default;

    explicit Distribution(Vector mass, double tol = kSumTolerance) : mass_(std::move(mass)) {
        if (mass_.size() == 0) throw InvariantError("distribution over an empty alphabet");
        for (Eigen::Index i = 0; i < mass_.size(); ++i) {
            if (!std::isfinite(mass_(i))) throw InvariantError("distribution has a non-finite entry");
            if (mass_(i) < -tol) {
                throw InvariantError("distribution entry " + std::to_string(i) + " is negative");
            }
            if (mass_(i) < 0.0) mass_(i) = 0.0;
        }
        if (std::abs(mass_.sum() - 1.0) > tol) {
            throw InvariantError("distribution does not sum to one");
        }
    }

    static Distribution uniform(Eigen::Index n) { return Distribution(Vector::Constant(n, 1.0 / static_cast<double>(n))); }

    static Distribution point_mass(Eigen::Index n, Eigen::Index at) {
        Vector v = Vector::Zero(n);
        v(at) = 1.0;
        return Distribution(std::move(v));
    }

    [[nodiscard]] Eigen::Index size() const { return mass_.size(); }
    [[nodiscard]] double operator[](Eigen::Index i) const { return mass_(i); }
    [[nodiscard]] const Vector& mass() const { return mass_; }

    friend bool operator==(const Distribution& a, const Distribution& b) { return a.mass_ == b.mass_; }

private:
    Vector mass_;
};

/// A displacement inside the simplex' affine hull: entries sum to zero.
class TangentVector {
public:
    TangentVector() = default;

    explicit TangentVector(Vector delta, double tol = kSumTolerance) : delta_(std::move(delta)) {
        const double scale = std::max(1.0, delta_.lpNorm<1>());
        if (std::abs(delta_.sum()) > tol * scale) throw InvariantError("tangent vector does not sum to zero");
    }

    /// Unit direction from `from` towards `to`, with the sum-zero property
    /// enforced before normalisation.
    static TangentVector direction(const Vector& from, const Vector& to) {
        Vector d = to - from;
        d.array() -= d.mean();
        const double n = d.norm();
        if (n == 0.0) throw DomainError("direction between identical points");
        return TangentVector(d / n);
    }

    [[nodiscard]] Eigen::Index size() const { return delta_.size(); }
    [[nodiscard]] const Vector& delta() const { return delta_; }
    [[nodiscard]] double norm() const { return delta_.norm(); }

private:
    Vector delta_;
};

/// Row-stochastic channel W(y|x), one row per input symbol.
///
/// Construction validates the rows and drops output columns that no input
/// can reach, so the capacity-achieving output distribution has full support.
class Channel {
public:
    Channel() = default;

    explicit Channel(Matrix rows, std::vector<std::string> input_labels = {},
                     std::vector<std::string> output_labels = {}, double tol = kSumTolerance)
        : input_labels_(std::move(input_labels)), output_labels_(std::move(output_labels)) {
        if (rows.rows() == 0 || rows.cols() == 0) throw InvariantError("channel with an empty alphabet");
        if (input_labels_.empty()) input_labels_ = default_labels(rows.rows());
        if (output_labels_.empty()) output_labels_ = default_labels(rows.cols());
        if (static_cast<Eigen::Index>(input_labels_.size()) != rows.rows() ||
            static_cast<Eigen::Index>(output_labels_.size()) != rows.cols()) {
            throw DimensionError("label count does not match channel matrix");
        }
        for (Eigen::Index x = 0; x < rows.rows(); ++x) {
            for (Eigen::Index y = 0; y < rows.cols(); ++y) {
                if (!std::isfinite(rows(x, y)) || rows(x, y) < 0.0) {
                    throw InvariantError("channel row " + std::to_string(x) + " has a negative entry");
                }
            }
            if (std::abs(rows.row(x).sum() - 1.0) > tol) {
                throw InvariantError("channel row " + std::to_string(x) + " does not sum to one");
            }
        }

        std::vector<Eigen::Index> keep;
        for (Eigen::Index y = 0; y < rows.cols(); ++y) {
            if (rows.col(y).maxCoeff() > 0.0) {
                keep.push_back(y);
            } else {
                dropped_outputs_.push_back(output_labels_[static_cast<std::size_t>(y)]);
            }
        }
        rows_.resize(rows.rows(), static_cast<Eigen::Index>(keep.size()));
        std::vector<std::string> kept_labels;
        for (std::size_t j = 0; j < keep.size(); ++j) {
            rows_.col(static_cast<Eigen::Index>(j)) = rows.col(keep[j]);
            kept_labels.push_back(output_labels_[static_cast<std::size_t>(keep[j])]);
        }
        output_labels_ = std::move(kept_labels);
    }

    [[nodiscard]] Eigen::Index inputs() const { return rows_.rows(); }
    [[nodiscard]] Eigen::Index outputs() const { return rows_.cols(); }
    [[nodiscard]] const Matrix& rows() const { return rows_; }
    [[nodiscard]] double operator()(Eigen::Index x, Eigen::Index y) const { return rows_(x, y); }
    [[nodiscard]] const std::vector<std::string>& input_labels() const { return input_labels_; }
    [[nodiscard]] const std::vector<std::string>& output_labels() const { return output_labels_; }
    [[nodiscard]] const std::vector<std::string>& dropped_outputs() const { return dropped_outputs_; }

    /// Binary symmetric channel with crossover probability `delta`.
    static Channel bsc(double delta) {
        Matrix w(2, 2);
        w << 1.0 - delta, delta, delta, 1.0 - delta;
        return Channel(w);
    }

    static Channel identity(Eigen::Index n) { return Channel(Matrix::Identity(n, n)); }

    /// Labels "0", "1", ... used when none are given.
    static std::vector<std::string> default_labels(Eigen::Index n) {
        std::vector<std::string> out;
        for (Eigen::Index i = 0; i < n; ++i) out.push_back(std::to_string(i));
        return out;
    }

private:
    Matrix rows_;
    std::vector<std::string> input_labels_;
    std::vector<std::string> output_labels_;
    std::vector<std::string> dropped_outputs_;
};

namespace detail {

inline void require_inputs(const Channel& w, Eigen::Index n) {
    if (w.inputs() != n) throw DimensionError("distribution and channel disagree on the input alphabet");
}

/// D(W(.|x) || q) for every input x. Returns +inf for rows not dominated by q.
inline Vector row_divergences(const Matrix& w, const Vector& q) {
    Vector d(w.rows());
    for (Eigen::Index x = 0; x < w.rows(); ++x) {
        double acc = 0.0;
        for (Eigen::Index y = 0; y < w.cols(); ++y) {
            const double wy = w(x, y);
            if (wy <= 0.0) continue;
            if (q(y) <= 0.0) {
                acc = std::numeric_limits<double>::infinity();
                break;
            }
            acc += wy * std::log(wy / q(y));
        }
        d(x) = acc;
    }
    return d;
}

/// Sum_x p(x) D(W(.|x) || pW) for any real vector p whose induced output
/// vector is positive wherever some row is. Used on pseudo-distributions
/// during Newton polishing; callers handle the sign of p.
inline double rate_unchecked(const Matrix& w, const Vector& p) {
    const Vector q = w.transpose() * p;
    double acc = 0.0;
    for (Eigen::Index x = 0; x < w.rows(); ++x) {
        if (p(x) == 0.0) continue;
        double dx = 0.0;
        for (Eigen::Index y = 0; y < w.cols(); ++y) {
            const double wy = w(x, y);
            if (wy <= 0.0) continue;
            dx += wy * std::log(wy / q(y));
        }
        acc += p(x) * dx;
    }
    return acc;
}

}  // namespace detail

/// Induced output distribution q_p(y) = sum_x W(y|x) p(x).
inline Distribution output_distribution(const Channel& channel, const Distribution& p) {
    detail::require_inputs(channel, p.size());
    Vector q = channel.rows().transpose() * p.mass();
    return Distribution(std::move(q), 1e-10);
}

/// Relative entropy D(p||q) in nats; 0 ln 0 = 0.
inline double kl_divergence(const Distribution& p, const Distribution& q) {
    if (p.size() != q.size()) throw DimensionError("kl_divergence: alphabet sizes differ");
    double acc = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        if (q[i] <= 0.0) throw SupportError("kl_divergence: support of p not contained in support of q");
        acc += p[i] * std::log(p[i] / q[i]);
    }
    return std::max(acc, 0.0);
}

/// Information rate I_W(p) = sum_x p(x) D(W(.|x) || q_p).
inline double mutual_information(const Channel& channel, const Distribution& p) {
    detail::require_inputs(channel, p.size());
    return std::max(detail::rate_unchecked(channel.rows(), p.mass()), 0.0);
}

/// Orthonormal basis of Ker(W) intersected with the sum-zero hyperplane.
inline std::vector<TangentVector> kernel_basis(const Channel& channel) {
    const Eigen::Index n = channel.inputs();
    Matrix m(channel.outputs() + 1, n);
    m.topRows(channel.outputs()) = channel.rows().transpose();
    m.row(channel.outputs()).setOnes();
    Matrix basis = linalg::null_space(m);
    std::vector<TangentVector> out;
    for (Eigen::Index j = 0; j < basis.cols(); ++j) {
        Vector v = basis.col(j);
        linalg::canonical_sign(v);
        out.emplace_back(std::move(v), 1e-10);
    }
    return out;
}

inline Matrix as_matrix(const std::vector<TangentVector>& vs, Eigen::Index n) {
    Matrix m(n, static_cast<Eigen::Index>(vs.size()));
    for (std::size_t j = 0; j < vs.size(); ++j) m.col(static_cast<Eigen::Index>(j)) = vs[j].delta();
    return m;
}

}  // namespace capcert
