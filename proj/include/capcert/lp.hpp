#pragma once

// Dense two-phase simplex for the small linear programs that show up here:
// linear oracles over the constraint polytope, feasibility checks and the
// dual-cone membership test. Bland's rule throughout, so no cycling.

#include "capcert/error.hpp"
#include "capcert/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace capcert::lp {

enum class Relation { LessEqual, Equal, GreaterEqual };

/// maximize c^T x  subject to  A x (rel) b,  x >= 0 except for free variables.
struct LinearProgram {
    Vector objective;
    Matrix constraints;
    Vector rhs;
    std::vector<Relation> relations;
    std::vector<bool> free_variables;  // empty: all variables nonnegative

    void add_row(const Vector& row, Relation rel, double b) {
        const Eigen::Index m = constraints.rows();
        const Eigen::Index n = row.size();
        if (constraints.cols() != n && m > 0) throw DimensionError("lp: row width mismatch");
        Matrix grown(m + 1, n);
        if (m > 0) grown.topRows(m) = constraints;
        grown.row(m) = row.transpose();
        constraints = std::move(grown);
        Vector r(m + 1);
        if (m > 0) r.head(m) = rhs;
        r(m) = b;
        rhs = std::move(r);
        relations.push_back(rel);
    }
};

enum class Status { Optimal, Infeasible, Unbounded };

struct Solution {
    Status status = Status::Infeasible;
    Vector x;
    double value = 0.0;
};

namespace detail {

class Tableau {
public:
    Tableau(Matrix body, Vector rhs, std::vector<Eigen::Index> basis)
        : t_(std::move(body)), b_(std::move(rhs)), basis_(std::move(basis)) {}

    // Run simplex iterations maximizing `cost` over columns not in `barred`.
    Status optimize(const Vector& cost, const std::vector<bool>& barred, double tol) {
        const Eigen::Index m = t_.rows();
        const Eigen::Index n = t_.cols();
        const int max_iter = 50 * static_cast<int>(m + n) + 1000;
        for (int it = 0; it < max_iter; ++it) {
            Eigen::Index enter = -1;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (barred[static_cast<std::size_t>(j)] || is_basic(j)) continue;
                double rc = cost(j);
                for (Eigen::Index i = 0; i < m; ++i) rc -= cost(basis_[static_cast<std::size_t>(i)]) * t_(i, j);
                if (rc > tol) {
                    enter = j;
                    break;
                }
            }
            if (enter < 0) return Status::Optimal;

            Eigen::Index leave = -1;
            double best = std::numeric_limits<double>::infinity();
            for (Eigen::Index i = 0; i < m; ++i) {
                const double a = t_(i, enter);
                if (a <= tol) continue;
                const double ratio = b_(i) / a;
                if (leave < 0 || ratio < best - 1e-14) {
                    best = ratio;
                    leave = i;
                } else if (ratio <= best + 1e-14 &&
                           basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)]) {
                    best = std::min(best, ratio);
                    leave = i;
                }
            }
            if (leave < 0) return Status::Unbounded;
            pivot(leave, enter);
        }
        throw SolverError("lp: iteration limit reached");
    }

    void pivot(Eigen::Index r, Eigen::Index c) {
        const double piv = t_(r, c);
        t_.row(r) /= piv;
        b_(r) /= piv;
        for (Eigen::Index i = 0; i < t_.rows(); ++i) {
            if (i == r) continue;
            const double f = t_(i, c);
            if (f == 0.0) continue;
            t_.row(i) -= f * t_.row(r);
            b_(i) -= f * b_(r);
            if (std::abs(b_(i)) < 1e-15) b_(i) = 0.0;
        }
        basis_[static_cast<std::size_t>(r)] = c;
    }

    void drop_row(Eigen::Index r) {
        const Eigen::Index m = t_.rows();
        for (Eigen::Index i = r; i + 1 < m; ++i) {
            t_.row(i) = t_.row(i + 1);
            b_(i) = b_(i + 1);
            basis_[static_cast<std::size_t>(i)] = basis_[static_cast<std::size_t>(i + 1)];
        }
        t_.conservativeResize(m - 1, Eigen::NoChange);
        b_.conservativeResize(m - 1);
        basis_.pop_back();
    }

    [[nodiscard]] bool is_basic(Eigen::Index j) const {
        for (Eigen::Index b : basis_) {
            if (b == j) return true;
        }
        return false;
    }

    [[nodiscard]] Vector primal(Eigen::Index n) const {
        Vector x = Vector::Zero(n);
        for (std::size_t i = 0; i < basis_.size(); ++i) {
            if (basis_[i] < n) x(basis_[i]) = b_(static_cast<Eigen::Index>(i));
        }
        return x;
    }

    Matrix& body() { return t_; }
    [[nodiscard]] const std::vector<Eigen::Index>& basis() const { return basis_; }

private:
    Matrix t_;
    Vector b_;
    std::vector<Eigen::Index> basis_;
};

}  // namespace detail

inline Solution solve(const LinearProgram& prog, double tol = 1e-10) {
    const Eigen::Index n_orig = prog.objective.size();
    const Eigen::Index m = prog.constraints.rows();
    if (m > 0 && prog.constraints.cols() != n_orig) throw DimensionError("lp: objective/constraint width mismatch");
    if (prog.rhs.size() != m || static_cast<Eigen::Index>(prog.relations.size()) != m) {
        throw DimensionError("lp: rhs/relations size mismatch");
    }

    // Split free variables x = u - v.
    std::vector<Eigen::Index> neg_col(static_cast<std::size_t>(n_orig), -1);
    Eigen::Index n = n_orig;
    for (Eigen::Index j = 0; j < n_orig; ++j) {
        if (!prog.free_variables.empty() && prog.free_variables[static_cast<std::size_t>(j)]) {
            neg_col[static_cast<std::size_t>(j)] = n++;
        }
    }

    Matrix a(m, n);
    Vector b = prog.rhs;
    std::vector<Relation> rel = prog.relations;
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < n_orig; ++j) {
            a(i, j) = prog.constraints(i, j);
            if (neg_col[static_cast<std::size_t>(j)] >= 0) a(i, neg_col[static_cast<std::size_t>(j)]) = -prog.constraints(i, j);
        }
        if (b(i) < 0.0) {
            a.row(i) *= -1.0;
            b(i) = -b(i);
            if (rel[static_cast<std::size_t>(i)] == Relation::LessEqual) {
                rel[static_cast<std::size_t>(i)] = Relation::GreaterEqual;
            } else if (rel[static_cast<std::size_t>(i)] == Relation::GreaterEqual) {
                rel[static_cast<std::size_t>(i)] = Relation::LessEqual;
            }
        }
    }

    Eigen::Index n_slack = 0;
    Eigen::Index n_art = 0;
    for (Relation r : rel) {
        if (r != Relation::Equal) ++n_slack;
        if (r != Relation::LessEqual) ++n_art;
    }
    const Eigen::Index total = n + n_slack + n_art;
    Matrix body = Matrix::Zero(m, total);
    body.leftCols(n) = a;
    std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
    std::vector<bool> is_art(static_cast<std::size_t>(total), false);
    Eigen::Index s = n;
    Eigen::Index r_col = n + n_slack;
    for (Eigen::Index i = 0; i < m; ++i) {
        switch (rel[static_cast<std::size_t>(i)]) {
            case Relation::LessEqual:
                body(i, s) = 1.0;
                basis[static_cast<std::size_t>(i)] = s++;
                break;
            case Relation::GreaterEqual:
                body(i, s++) = -1.0;
                body(i, r_col) = 1.0;
                is_art[static_cast<std::size_t>(r_col)] = true;
                basis[static_cast<std::size_t>(i)] = r_col++;
                break;
            case Relation::Equal:
                body(i, r_col) = 1.0;
                is_art[static_cast<std::size_t>(r_col)] = true;
                basis[static_cast<std::size_t>(i)] = r_col++;
                break;
        }
    }

    detail::Tableau tab(std::move(body), b, std::move(basis));
    std::vector<bool> barred(static_cast<std::size_t>(total), false);

    if (n_art > 0) {
        Vector phase1 = Vector::Zero(total);
        for (Eigen::Index j = 0; j < total; ++j) {
            if (is_art[static_cast<std::size_t>(j)]) phase1(j) = -1.0;
        }
        tab.optimize(phase1, barred, tol);
        Vector x = tab.primal(total);
        double infeas = 0.0;
        for (Eigen::Index j = 0; j < total; ++j) {
            if (is_art[static_cast<std::size_t>(j)]) infeas += x(j);
        }
        if (infeas > tol * (1.0 + b.lpNorm<Eigen::Infinity>())) {
            return Solution{Status::Infeasible, Vector(), 0.0};
        }
        // Drive remaining artificials out of the basis; rows that cannot be
        // pivoted are redundant and removed.
        for (Eigen::Index i = 0; i < tab.body().rows();) {
            const Eigen::Index bi = tab.basis()[static_cast<std::size_t>(i)];
            if (!is_art[static_cast<std::size_t>(bi)]) {
                ++i;
                continue;
            }
            Eigen::Index col = -1;
            for (Eigen::Index j = 0; j < total; ++j) {
                if (!is_art[static_cast<std::size_t>(j)] && std::abs(tab.body()(i, j)) > tol) {
                    col = j;
                    break;
                }
            }
            if (col >= 0) {
                tab.pivot(i, col);
                ++i;
            } else {
                tab.drop_row(i);
            }
        }
        for (Eigen::Index j = 0; j < total; ++j) barred[static_cast<std::size_t>(j)] = is_art[static_cast<std::size_t>(j)];
    }

    Vector cost = Vector::Zero(total);
    for (Eigen::Index j = 0; j < n_orig; ++j) {
        cost(j) = prog.objective(j);
        if (neg_col[static_cast<std::size_t>(j)] >= 0) cost(neg_col[static_cast<std::size_t>(j)]) = -prog.objective(j);
    }
    const Status st = tab.optimize(cost, barred, tol);
    if (st == Status::Unbounded) return Solution{Status::Unbounded, Vector(), std::numeric_limits<double>::infinity()};

    const Vector full = tab.primal(total);
    Vector x(n_orig);
    for (Eigen::Index j = 0; j < n_orig; ++j) {
        x(j) = full(j);
        if (neg_col[static_cast<std::size_t>(j)] >= 0) x(j) -= full(neg_col[static_cast<std::size_t>(j)]);
    }
    return Solution{Status::Optimal, x, prog.objective.dot(x)};
}

}  // namespace capcert::lp
