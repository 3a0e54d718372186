#pragma once

// Euclidean projection onto a polyhedron {z : G z >= h} by a primal
// active-set method. The objective is 1/2 ||z - target||^2, so the
// equality-constrained subproblems reduce to orthogonal projections onto the
// null space of the working set.

#include "capcert/error.hpp"
#include "capcert/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace capcert::qp {

struct Projection {
    Vector point;
    std::vector<Eigen::Index> active;  // working set at termination
    int iterations = 0;
};

/// Project `target` onto {z : G z >= h}. `start` must be feasible (up to
/// `tol`). Ties in the blocking test and in constraint release are broken by
/// smallest index (Bland), which rules out cycling on degenerate vertices.
inline Projection project_polyhedron(const Matrix& g, const Vector& h, const Vector& target, Vector start,
                                     double tol = 1e-12) {
    const Eigen::Index k = target.size();
    const Eigen::Index m = g.rows();
    if (g.cols() != k && m > 0) throw DimensionError("qp: constraint width mismatch");
    if (start.size() != k) throw DimensionError("qp: start point size mismatch");

    Vector z = std::move(start);
    std::vector<Eigen::Index> work;
    std::vector<bool> in_work(static_cast<std::size_t>(m), false);
    const double scale = 1.0 + target.lpNorm<Eigen::Infinity>() + z.lpNorm<Eigen::Infinity>();
    const int max_iter = 20 * static_cast<int>(m + k) + 100;

    for (int it = 0; it < max_iter; ++it) {
        Matrix a(static_cast<Eigen::Index>(work.size()), k);
        for (std::size_t i = 0; i < work.size(); ++i) a.row(static_cast<Eigen::Index>(i)) = g.row(work[i]);

        Vector step = target - z;
        Matrix range;
        if (!work.empty()) {
            range = linalg::range_space(a.transpose());
            step -= range * (range.transpose() * step);
        }

        if (step.norm() <= tol * scale) {
            if (work.empty()) return Projection{z, {}, it};
            // Multipliers from z - target = A^T lambda.
            const Vector lambda = a.transpose().completeOrthogonalDecomposition().solve(z - target);
            Eigen::Index release = -1;
            for (std::size_t i = 0; i < work.size(); ++i) {
                if (lambda(static_cast<Eigen::Index>(i)) < -tol * scale) {
                    if (release < 0 || work[i] < work[static_cast<std::size_t>(release)]) {
                        release = static_cast<Eigen::Index>(i);
                    }
                }
            }
            if (release < 0) return Projection{z, work, it};
            in_work[static_cast<std::size_t>(work[static_cast<std::size_t>(release)])] = false;
            work.erase(work.begin() + release);
            continue;
        }

        double alpha = 1.0;
        Eigen::Index block = -1;
        for (Eigen::Index i = 0; i < m; ++i) {
            if (in_work[static_cast<std::size_t>(i)]) continue;
            const double gs = g.row(i).dot(step);
            if (gs >= -tol * g.row(i).norm() * step.norm()) continue;
            const double slack = std::max(0.0, g.row(i).dot(z) - h(i));
            const double ai = slack / -gs;
            if (ai < alpha - 1e-15) {  // first (smallest) index wins ties
                alpha = ai;
                block = i;
            }
        }
        z += alpha * step;
        if (block >= 0) {
            work.push_back(block);
            in_work[static_cast<std::size_t>(block)] = true;
        }
    }
    throw SolverError("qp: active-set iteration limit reached");
}

}  // namespace capcert::qp
