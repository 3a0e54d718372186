#pragma once

// Capacity, constrained capacity and polyhedral descriptions of the set of
// capacity-achieving input distributions.
//
// Both solvers run a first-order method until the support (and, for the
// constrained problem, the set of active halfspaces) can be read off, then
// polish with Newton's method on that face. A polished point is accepted only
// through the same duality-gap certificate the first-order method uses.

#include "capcert/core.hpp"
#include "capcert/lp.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <utility>
#include <vector>

namespace capcert {

/// Finite list of vectors a encoding the halfspaces <p, a> >= 0.
class ConstraintSet {
public:
    ConstraintSet() = default;

    /// Throws InfeasibleError when the simplex cut by the halfspaces is empty.
    ConstraintSet(std::vector<Vector> vectors, Eigen::Index inputs);

    [[nodiscard]] const std::vector<Vector>& vectors() const { return vectors_; }
    [[nodiscard]] bool empty() const { return vectors_.empty(); }
    [[nodiscard]] std::size_t size() const { return vectors_.size(); }
    [[nodiscard]] Eigen::Index inputs() const { return inputs_; }

private:
    std::vector<Vector> vectors_;
    Eigen::Index inputs_ = 0;
};

/// The feasible input polytope: the simplex, optionally cut by a ConstraintSet.
struct InputPolytope {
    Eigen::Index inputs = 0;
    std::optional<ConstraintSet> constraints;

    [[nodiscard]] bool constrained() const { return constraints.has_value() && !constraints->empty(); }

    [[nodiscard]] bool contains(const Vector& p, double tol = 1e-12) const {
        if (p.size() != inputs) return false;
        if (p.minCoeff() < -tol || std::abs(p.sum() - 1.0) > tol) return false;
        if (constrained()) {
            for (const Vector& a : constraints->vectors()) {
                if (a.dot(p) < -tol * std::max(1.0, a.lpNorm<Eigen::Infinity>())) return false;
            }
        }
        return true;
    }

    /// A maximizing vertex of c^T p.
    [[nodiscard]] Vector maximize(const Vector& c) const {
        if (!constrained()) {
            Eigen::Index best = 0;
            for (Eigen::Index i = 1; i < c.size(); ++i) {
                if (c(i) > c(best)) best = i;
            }
            Vector v = Vector::Zero(inputs);
            v(best) = 1.0;
            return v;
        }
        lp::LinearProgram prog = base_program();
        prog.objective = c;
        const lp::Solution sol = lp::solve(prog);
        if (sol.status != lp::Status::Optimal) throw SolverError("linear oracle over the input polytope failed");
        return sol.x;
    }

    [[nodiscard]] lp::LinearProgram base_program() const {
        lp::LinearProgram prog;
        prog.objective = Vector::Zero(inputs);
        prog.add_row(Vector::Ones(inputs), lp::Relation::Equal, 1.0);
        if (constrained()) {
            for (const Vector& a : constraints->vectors()) prog.add_row(a, lp::Relation::GreaterEqual, 0.0);
        }
        return prog;
    }
};

inline ConstraintSet::ConstraintSet(std::vector<Vector> vectors, Eigen::Index inputs)
    : vectors_(std::move(vectors)), inputs_(inputs) {
    for (const Vector& a : vectors_) {
        if (a.size() != inputs_) throw DimensionError("constraint vector length differs from the input alphabet");
        if (!a.allFinite()) throw InvariantError("constraint vector has a non-finite entry");
    }
    if (vectors_.empty()) return;
    InputPolytope poly{inputs_, *this};
    if (lp::solve(poly.base_program()).status != lp::Status::Optimal) {
        throw InfeasibleError("constraint set leaves no feasible input distribution");
    }
}

struct CapacitySolution {
    double capacity = 0.0;  ///< certified upper end of the duality bracket (nats)
    Distribution q_star;
    Distribution p_witness;
    int iterations = 0;
    double residual = 0.0;     ///< upper bound minus I(p_witness)
    bool constrained = false;
    bool monotone = true;      ///< lower-bound sequence never decreased
};

/// Polyhedral description of the capacity-achieving set
/// {p in feasible polytope : p - representative in V}.
struct PiSet {
    std::vector<Eigen::Index> x_max;
    Matrix equality_matrix;  ///< rows span V's orthogonal complement
    Vector equality_rhs;
    std::vector<TangentVector> v_basis;  ///< orthonormal
    Distribution representative;
    bool constrained = false;
    std::optional<ConstraintSet> constraint_set;

    [[nodiscard]] Eigen::Index inputs() const { return representative.size(); }
    [[nodiscard]] Eigen::Index dimension() const { return static_cast<Eigen::Index>(v_basis.size()); }
    [[nodiscard]] Matrix basis() const { return as_matrix(v_basis, inputs()); }
    [[nodiscard]] InputPolytope feasible() const {
        return InputPolytope{inputs(), constrained ? constraint_set : std::nullopt};
    }

    [[nodiscard]] bool contains(const Vector& p, double tol = 1e-9) const {
        if (!feasible().contains(p, tol)) return false;
        return (equality_matrix * p - equality_rhs).lpNorm<Eigen::Infinity>() <= tol;
    }
};

namespace detail {

struct Candidate {
    Vector p;
    double lower = 0.0;  // I(p)
    double gap = std::numeric_limits<double>::infinity();
};

/// Frank-Wolfe duality gap max_{s in poly} <grad I(p), s - p> together with I(p).
inline Candidate certify_point(const Channel& channel, const InputPolytope& poly, const Vector& p) {
    Candidate c;
    c.p = p;
    const Vector q = channel.rows().transpose() * p;
    const Vector d = row_divergences(channel.rows(), q);
    c.lower = std::max(0.0, rate_unchecked(channel.rows(), p));
    if (!d.allFinite()) return c;
    const double at_p = d.dot(p);
    if (!poly.constrained()) {
        c.gap = std::max(0.0, d.maxCoeff() - at_p);
    } else {
        c.gap = std::max(0.0, d.dot(poly.maximize(d)) - at_p);
    }
    return c;
}

/// Clamp rounding-level negatives and renormalise. Returns nullopt when a
/// genuinely negative entry remains.
inline std::optional<Vector> clean_distribution(Vector p, double tol = 1e-12) {
    if (p.minCoeff() < -tol) return std::nullopt;
    p = p.cwiseMax(0.0);
    const double s = p.sum();
    if (s <= 0.0) return std::nullopt;
    return Vector(p / s);
}

/// Newton ascent of I over the face {p : p_x = 0 for x not free, sum p = 1,
/// <a, p> = 0 for a in active}. Only directions that change the output
/// distribution are moved; the rate is strictly concave along them.
/// Kernel directions inside the face are returned in `fiber`.
inline std::optional<Vector> newton_on_face(const Matrix& w, const Vector& start, const std::vector<bool>& free,
                                            const std::vector<Vector>& active, Matrix& fiber) {
    const Eigen::Index n = w.rows();
    std::vector<Vector> rows;
    std::vector<double> rhs;
    for (Eigen::Index x = 0; x < n; ++x) {
        if (!free[static_cast<std::size_t>(x)]) {
            rows.push_back(Vector::Unit(n, x));
            rhs.push_back(0.0);
        }
    }
    rows.push_back(Vector::Ones(n));
    rhs.push_back(1.0);
    for (const Vector& a : active) {
        rows.push_back(a);
        rhs.push_back(0.0);
    }
    const Matrix m = linalg::stack_rows(rows, n);
    const Vector r = Eigen::Map<const Vector>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
    Vector p = start - m.completeOrthogonalDecomposition().solve(m * start - r);
    if ((m * p - r).lpNorm<Eigen::Infinity>() > 1e-9) return std::nullopt;

    const Matrix face = linalg::null_space(m);
    Matrix ascent(n, 0);
    fiber = Matrix(n, 0);
    if (face.cols() > 0) {
        const Matrix out = w.transpose() * face;
        const Matrix ker = linalg::null_space(out);
        fiber = face * ker;
        ascent = face * linalg::orthogonal_complement(ker, face.cols());
    }
    if (ascent.cols() == 0) return p;

    const Vector wlogw = (w.array() > 0.0).select(w.array() * w.array().log(), 0.0).rowwise().sum();
    for (int it = 0; it < 100; ++it) {
        const Vector q = w.transpose() * p;
        if (q.minCoeff() <= 0.0) return std::nullopt;
        // grad_x = sum_y W log W - sum_y W log q (the -1 is constant on the face)
        const Vector grad = wlogw - w * q.array().log().matrix();
        const Vector gz = ascent.transpose() * grad;
        const Matrix wa = w.transpose() * ascent;
        const Matrix hz = wa.transpose() * q.cwiseInverse().asDiagonal() * wa;
        const Vector step = hz.ldlt().solve(gz);
        const double decrement = gz.dot(step);
        if (!std::isfinite(decrement)) return std::nullopt;
        if (decrement < 1e-30) break;

        const double f0 = rate_unchecked(w, p);
        double s = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 60; ++ls, s *= 0.5) {
            const Vector trial = p + s * (ascent * step);
            if ((w.transpose() * trial).minCoeff() <= 0.0) continue;
            if (rate_unchecked(w, trial) >= f0 - 1e-15) {
                p = trial;
                moved = true;
                break;
            }
        }
        if (!moved || decrement < 1e-24) break;
    }
    return p;
}

/// Shift `p` along the kernel fiber so that it satisfies every inequality,
/// if possible.
inline std::optional<Vector> repair_in_fiber(const Vector& p, const Matrix& fiber, const InputPolytope& poly) {
    const Eigen::Index n = p.size();
    const Eigen::Index k = fiber.cols();
    if (k == 0) return std::nullopt;
    lp::LinearProgram prog;
    prog.objective = Vector::Zero(k + 1);
    prog.objective(k) = 1.0;  // maximise the smallest coordinate slack
    prog.free_variables.assign(static_cast<std::size_t>(k), true);
    prog.free_variables.push_back(false);
    for (Eigen::Index x = 0; x < n; ++x) {
        Vector row(k + 1);
        row.head(k) = fiber.row(x).transpose();
        row(k) = -1.0;
        if (fiber.row(x).norm() < 1e-14) {
            if (p(x) < -1e-12) return std::nullopt;
            continue;
        }
        prog.add_row(row, lp::Relation::GreaterEqual, -p(x));
    }
    if (poly.constrained()) {
        for (const Vector& a : poly.constraints->vectors()) {
            Vector row = Vector::Zero(k + 1);
            row.head(k) = fiber.transpose() * a;
            prog.add_row(row, lp::Relation::GreaterEqual, -a.dot(p));
        }
    }
    Vector cap = Vector::Zero(k + 1);
    cap(k) = 1.0;
    prog.add_row(cap, lp::Relation::LessEqual, 1.0);
    const lp::Solution sol = lp::solve(prog);
    if (sol.status != lp::Status::Optimal) return std::nullopt;
    return Vector(p + fiber * sol.x.head(k));
}

/// Newton polish on a guessed face, growing the zero set / active set while
/// the polished point leaves the polytope.
inline std::optional<Vector> polish_face(const Channel& channel, const InputPolytope& poly, const Vector& start,
                                         std::vector<bool> free, std::vector<bool> active_mask) {
    const Eigen::Index n = channel.inputs();
    const auto& cons = poly.constrained() ? poly.constraints->vectors() : std::vector<Vector>{};
    for (Eigen::Index round = 0; round <= n + static_cast<Eigen::Index>(cons.size()); ++round) {
        std::vector<Vector> active;
        for (std::size_t i = 0; i < cons.size(); ++i) {
            if (active_mask[i]) active.push_back(cons[i]);
        }
        Matrix fiber;
        std::optional<Vector> p = newton_on_face(channel.rows(), start, free, active, fiber);
        if (!p) return std::nullopt;
        if (!poly.contains(*p, 1e-12)) {
            if (auto fixed = repair_in_fiber(*p, fiber, poly); fixed && poly.contains(*fixed, 1e-12)) p = fixed;
        }
        Eigen::Index worst = -1;
        double worst_val = -1e-12;
        for (Eigen::Index x = 0; x < n; ++x) {
            if ((*p)(x) < worst_val) {
                worst_val = (*p)(x);
                worst = x;
            }
        }
        if (worst >= 0) {
            free[static_cast<std::size_t>(worst)] = false;
            continue;
        }
        std::ptrdiff_t violated = -1;
        double violated_val = 0.0;
        for (std::size_t i = 0; i < cons.size(); ++i) {
            const double v = cons[i].dot(*p) / std::max(1.0, cons[i].lpNorm<Eigen::Infinity>());
            if (v < -1e-12 && v < violated_val) {
                violated_val = v;
                violated = static_cast<std::ptrdiff_t>(i);
            }
        }
        if (violated >= 0) {
            active_mask[static_cast<std::size_t>(violated)] = true;
            continue;
        }
        return clean_distribution(*p);
    }
    return std::nullopt;
}

/// Try a ladder of support / active-set guesses read off an iterate and
/// return the best certified candidate.
inline Candidate polish(const Channel& channel, const InputPolytope& poly, const Vector& iterate) {
    const Eigen::Index n = channel.inputs();
    const auto& cons = poly.constrained() ? poly.constraints->vectors() : std::vector<Vector>{};
    const Vector q = channel.rows().transpose() * iterate;
    const Vector d = row_divergences(channel.rows(), q);
    Candidate best;
    if (!d.allFinite()) return best;
    const double dmax = d.maxCoeff();

    std::set<std::pair<std::vector<bool>, std::vector<bool>>> tried;
    for (double tau = 1e-1; tau >= 1e-11; tau *= 0.1) {
        for (int rule = 0; rule < 2; ++rule) {
            std::vector<bool> free(static_cast<std::size_t>(n));
            for (Eigen::Index x = 0; x < n; ++x) {
                const bool by_mass = iterate(x) > tau;
                const bool by_value = d(x) >= dmax - tau;
                free[static_cast<std::size_t>(x)] = poly.constrained() ? by_mass : (rule == 0 ? by_value : by_mass);
            }
            std::vector<bool> active(cons.size());
            for (std::size_t i = 0; i < cons.size(); ++i) {
                const double scale = std::max(1.0, cons[i].lpNorm<Eigen::Infinity>());
                active[i] = cons[i].dot(iterate) <= (rule == 0 ? tau : std::sqrt(tau)) * scale;
            }
            if (std::none_of(free.begin(), free.end(), [](bool b) { return b; })) continue;
            if (!tried.emplace(free, active).second) continue;
            const std::optional<Vector> p = polish_face(channel, poly, iterate, free, active);
            if (!p) continue;
            Candidate c = certify_point(channel, poly, *p);
            if (c.gap < best.gap) best = std::move(c);
        }
    }
    return best;
}

inline CapacitySolution make_solution(const Channel& channel, const Candidate& c, int iterations, bool constrained,
                                      bool monotone) {
    CapacitySolution sol;
    sol.p_witness = Distribution(c.p, 1e-10);
    sol.q_star = output_distribution(channel, sol.p_witness);
    sol.capacity = c.lower + c.gap;
    sol.residual = c.gap;
    sol.iterations = iterations;
    sol.constrained = constrained;
    sol.monotone = monotone;
    return sol;
}

/// maximize phi(g) = I(p + g dir) over [0, gmax]; phi is concave.
inline double line_search(const Matrix& w, const Vector& wlogw, const Vector& p, const Vector& dir, double gmax) {
    const Vector q0 = w.transpose() * p;
    const Vector dy = w.transpose() * dir;
    const double lin = wlogw.dot(dir);
    auto slope = [&](double g) {
        double s = lin;
        for (Eigen::Index y = 0; y < dy.size(); ++y) {
            if (dy(y) == 0.0) continue;
            const double qy = q0(y) + g * dy(y);
            if (qy <= 0.0) return dy(y) < 0.0 ? -std::numeric_limits<double>::infinity()
                                              : std::numeric_limits<double>::infinity();
            s -= dy(y) * std::log(qy);
        }
        return s;
    };
    if (slope(0.0) <= 0.0) return 0.0;
    if (slope(gmax) >= 0.0) return gmax;
    double lo = 0.0;
    double hi = gmax;
    for (int it = 0; it < 200 && hi - lo > 1e-16 * (1.0 + hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        (slope(mid) > 0.0 ? lo : hi) = mid;
    }
    return lo;
}

}  // namespace detail

/// Blahut-Arimoto iteration with Newton polishing.
///
/// Stops once max_x D(W(.|x)||q_k) - I(p_k) <= tol; the reported capacity is
/// that upper bound. Throws SolverError when max_iter is exhausted first.
inline CapacitySolution blahut_arimoto(const Channel& channel, double tol = 1e-9, int max_iter = 1000000) {
    if (!(tol > 0.0)) throw DomainError("blahut_arimoto: tol must be positive");
    const Matrix& w = channel.rows();
    const InputPolytope poly{channel.inputs(), std::nullopt};
    Vector p = Vector::Constant(channel.inputs(), 1.0 / static_cast<double>(channel.inputs()));
    double last_lower = -std::numeric_limits<double>::infinity();
    bool monotone = true;
    double next_polish = 1e-2;

    for (int it = 0; it <= max_iter; ++it) {
        const Vector q = w.transpose() * p;
        const Vector d = detail::row_divergences(w, q);
        const double lower = std::max(0.0, d.dot(p));
        const double upper = d.maxCoeff();
        if (lower < last_lower - 1e-13) monotone = false;
        last_lower = std::max(last_lower, lower);
        const double gap = std::max(0.0, upper - lower);

        if (gap <= next_polish || gap <= tol || it % 1000 == 999) {
            next_polish = std::min(next_polish, gap * 1e-2);
            detail::Candidate c = detail::polish(channel, poly, p);
            if (gap <= tol && gap < c.gap) c = detail::Candidate{p, lower, gap};
            if (c.gap <= tol) return detail::make_solution(channel, c, it, false, monotone);
        }

        // p_x <- p_x exp(D_x) / Z, evaluated relative to the largest exponent.
        Vector next = (d.array() - upper).exp().matrix().cwiseProduct(p);
        p = next / next.sum();
    }
    throw SolverError("blahut_arimoto: max_iter exceeded before the duality gap reached tol");
}

/// Capacity over {p in simplex : <p,a> >= 0 for a in A} by away-step
/// conditional gradient with linear-programming oracles, then Newton polish.
inline CapacitySolution constrained_capacity(const Channel& channel, const ConstraintSet& constraints, double tol = 1e-9,
                                             int max_iter = 100000) {
    if (!(tol > 0.0)) throw DomainError("constrained_capacity: tol must be positive");
    if (constraints.inputs() != channel.inputs() && !constraints.empty()) {
        throw DimensionError("constraint vectors and channel disagree on the input alphabet");
    }
    const Matrix& w = channel.rows();
    const Eigen::Index n = channel.inputs();
    const InputPolytope poly{n, constraints};
    const Vector wlogw = (w.array() > 0.0).select(w.array() * w.array().log(), 0.0).rowwise().sum();

    // Start from the barycentre of the vertices that maximise each coordinate.
    std::vector<Vector> vertices;
    std::vector<double> weights;
    for (Eigen::Index x = 0; x < n; ++x) {
        const Vector v = poly.maximize(Vector::Unit(n, x));
        if (v(x) <= 1e-12) continue;
        const bool seen = std::any_of(vertices.begin(), vertices.end(),
                                      [&](const Vector& u) { return (u - v).lpNorm<Eigen::Infinity>() < 1e-12; });
        if (!seen) vertices.push_back(v);
    }
    if (vertices.empty()) vertices.push_back(poly.maximize(Vector::Zero(n)));
    weights.assign(vertices.size(), 1.0 / static_cast<double>(vertices.size()));
    Vector p = Vector::Zero(n);
    for (std::size_t i = 0; i < vertices.size(); ++i) p += weights[i] * vertices[i];
    if ((w.transpose() * p).minCoeff() <= 0.0) {
        throw SolverError("constraints make an output symbol unreachable; remove it from the channel");
    }

    double last_lower = -std::numeric_limits<double>::infinity();
    bool monotone = true;
    double next_polish = 1e-2;
    for (int it = 0; it <= max_iter; ++it) {
        const Vector q = w.transpose() * p;
        const Vector d = detail::row_divergences(w, q);
        const double lower = std::max(0.0, d.dot(p));
        if (lower < last_lower - 1e-13) monotone = false;
        last_lower = std::max(last_lower, lower);
        const Vector s = poly.maximize(d);
        const double fw_gap = std::max(0.0, d.dot(s) - d.dot(p));

        if (fw_gap <= next_polish || fw_gap <= tol || it % 1000 == 999) {
            next_polish = std::min(next_polish, fw_gap * 1e-2);
            detail::Candidate c = detail::polish(channel, poly, p);
            if (fw_gap <= tol && fw_gap < c.gap) c = detail::Candidate{p, lower, fw_gap};
            if (c.gap <= tol) return detail::make_solution(channel, c, it, true, monotone);
        }

        std::size_t away = 0;
        for (std::size_t i = 1; i < vertices.size(); ++i) {
            if (d.dot(vertices[i]) < d.dot(vertices[away])) away = i;
        }
        const double away_gap = d.dot(p) - d.dot(vertices[away]);

        if (fw_gap >= away_gap || vertices.size() == 1) {
            const Vector dir = s - p;
            const double g = detail::line_search(w, wlogw, p, dir, 1.0);
            for (double& wt : weights) wt *= (1.0 - g);
            std::size_t slot = vertices.size();
            for (std::size_t i = 0; i < vertices.size(); ++i) {
                if ((vertices[i] - s).lpNorm<Eigen::Infinity>() < 1e-12) slot = i;
            }
            if (slot == vertices.size()) {
                vertices.push_back(s);
                weights.push_back(0.0);
            }
            weights[slot] += g;
        } else {
            const double wa = weights[away];
            const double gmax = wa / (1.0 - wa);
            const Vector dir = p - vertices[away];
            double g = detail::line_search(w, wlogw, p, dir, gmax);
            for (double& wt : weights) wt *= (1.0 + g);
            weights[away] -= g;
            if (g >= gmax) weights[away] = 0.0;
        }
        for (std::size_t i = vertices.size(); i-- > 0;) {
            if (weights[i] <= 0.0) {
                vertices.erase(vertices.begin() + static_cast<std::ptrdiff_t>(i));
                weights.erase(weights.begin() + static_cast<std::ptrdiff_t>(i));
            }
        }
        p.setZero();
        for (std::size_t i = 0; i < vertices.size(); ++i) p += weights[i] * vertices[i];
        if ((w.transpose() * p).minCoeff() <= 0.0) throw SolverError("constrained_capacity: iterate lost output support");
    }
    throw SolverError("constrained_capacity: max_iter exceeded before the duality gap reached tol");
}

namespace detail {

/// Maximise sum log p(x) over {base + V z >= 0} for the rows of V that are
/// not identically zero. Falls back to `base` when the polytope has no
/// relative interior in those coordinates.
inline Vector analytic_center(const Vector& base, const Matrix& v) {
    const Eigen::Index n = base.size();
    const Eigen::Index k = v.cols();
    if (k == 0) return base;
    std::vector<Eigen::Index> rows;
    for (Eigen::Index x = 0; x < n; ++x) {
        if (v.row(x).norm() > 1e-12) rows.push_back(x);
    }
    if (rows.empty()) return base;

    Vector z = Vector::Zero(k);
    double smin = std::numeric_limits<double>::infinity();
    for (Eigen::Index x : rows) smin = std::min(smin, base(x));
    if (smin <= 1e-12) {
        lp::LinearProgram prog;
        prog.objective = Vector::Zero(k + 1);
        prog.objective(k) = 1.0;
        prog.free_variables.assign(static_cast<std::size_t>(k), true);
        prog.free_variables.push_back(false);
        for (Eigen::Index x : rows) {
            Vector row(k + 1);
            row.head(k) = v.row(x).transpose();
            row(k) = -1.0;
            prog.add_row(row, lp::Relation::GreaterEqual, -base(x));
        }
        Vector cap = Vector::Zero(k + 1);
        cap(k) = 1.0;
        prog.add_row(cap, lp::Relation::LessEqual, 1.0);
        const lp::Solution sol = lp::solve(prog);
        if (sol.status != lp::Status::Optimal || sol.x(k) <= 1e-12) return base;
        z = sol.x.head(k);
    }

    auto objective = [&](const Vector& zz, bool& ok) {
        double f = 0.0;
        ok = true;
        for (Eigen::Index x : rows) {
            const double s = base(x) + v.row(x).dot(zz);
            if (s <= 0.0) {
                ok = false;
                return 0.0;
            }
            f += std::log(s);
        }
        return f;
    };
    for (int it = 0; it < 100; ++it) {
        Vector grad = Vector::Zero(k);
        Matrix hess = Matrix::Zero(k, k);
        for (Eigen::Index x : rows) {
            const double s = base(x) + v.row(x).dot(z);
            const Vector vx = v.row(x).transpose();
            grad += vx / s;
            hess += vx * vx.transpose() / (s * s);
        }
        const Vector step = hess.ldlt().solve(grad);
        const double decrement = grad.dot(step);
        if (!(decrement > 1e-24)) break;
        bool ok = true;
        const double f0 = objective(z, ok);
        double t = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
            const Vector trial = z + t * step;
            const double f = objective(trial, ok);
            if (ok && f >= f0) {
                z = trial;
                moved = true;
                break;
            }
        }
        if (!moved) break;
    }
    return base + v * z;
}

inline PiSet assemble_pi(const Vector& anchor, const Matrix& v, std::vector<Eigen::Index> x_max, bool constrained,
                         std::optional<ConstraintSet> cons, Vector representative) {
    const Eigen::Index n = anchor.size();
    PiSet pi;
    pi.x_max = std::move(x_max);
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
        Vector col = v.col(j);
        linalg::canonical_sign(col);
        pi.v_basis.emplace_back(std::move(col), 1e-10);
    }
    const Matrix comp = linalg::orthogonal_complement(v, n);
    pi.equality_matrix = comp.transpose();
    pi.equality_rhs = pi.equality_matrix * anchor;
    const std::optional<Vector> rep = clean_distribution(std::move(representative));
    if (!rep) throw InfeasibleError("capacity-achieving set has no feasible representative");
    pi.representative = Distribution(*rep, 1e-10);
    pi.constrained = constrained;
    pi.constraint_set = std::move(cons);
    return pi;
}

}  // namespace detail

/// Pi = {p >= 0 : p(x) = 0 outside x_max, pW = q*, sum p = 1}, with
/// x_max = {x : D(W(.|x)||q*) >= C - support_tol}.
inline PiSet capacity_achieving_set(const Channel& channel, const CapacitySolution& sol, double support_tol = 1e-7) {
    if (sol.q_star.size() != channel.outputs() || sol.p_witness.size() != channel.inputs()) {
        throw DimensionError("capacity solution does not match the channel");
    }
    const Eigen::Index n = channel.inputs();
    const Vector d = detail::row_divergences(channel.rows(), sol.q_star.mass());
    std::vector<Eigen::Index> x_max;
    std::vector<Vector> rows;
    Vector anchor = sol.p_witness.mass();
    for (Eigen::Index x = 0; x < n; ++x) {
        if (d(x) >= sol.capacity - support_tol) {
            x_max.push_back(x);
        } else {
            if (anchor(x) > 1e-9) {
                throw InfeasibleError("capacity-achieving set is empty at this support_tol; the solver residual is too large");
            }
            anchor(x) = 0.0;
            rows.push_back(Vector::Unit(n, x));
        }
    }
    anchor /= anchor.sum();
    Matrix m(static_cast<Eigen::Index>(rows.size()) + channel.outputs() + 1, n);
    for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    m.middleRows(static_cast<Eigen::Index>(rows.size()), channel.outputs()) = channel.rows().transpose();
    m.row(m.rows() - 1).setOnes();
    const Matrix v = linalg::null_space(m);
    Vector rep = detail::analytic_center(anchor, v);
    return detail::assemble_pi(anchor, v, std::move(x_max), false, std::nullopt, std::move(rep));
}

/// Pi^A = (p* + V') intersected with P_A, where V' collects the kernel
/// directions of W along which the gradient at p* vanishes. With an empty
/// constraint list this is capacity_achieving_set.
inline PiSet constrained_pi_set(const Channel& channel, const ConstraintSet& constraints, const CapacitySolution& sol,
                                double support_tol = 1e-7) {
    if (constraints.empty()) return capacity_achieving_set(channel, sol, support_tol);
    const Eigen::Index n = channel.inputs();
    if (constraints.inputs() != n) throw DimensionError("constraint vectors and channel disagree on the input alphabet");
    const Vector& p_star = sol.p_witness.mass();
    const InputPolytope poly{n, constraints};
    if (!poly.contains(p_star, 1e-9)) throw InfeasibleError("constrained optimum violates the constraint set");

    const Vector grad = detail::row_divergences(channel.rows(), sol.q_star.mass()).array() - 1.0;
    Matrix v = as_matrix(kernel_basis(channel), n);
    if (v.cols() > 0) {
        const Matrix slope = grad.transpose() * v;
        if (slope.norm() > 1e-9 * (1.0 + grad.norm())) v = v * linalg::null_space(slope);
    }
    std::vector<Eigen::Index> x_max;
    for (Eigen::Index x = 0; x < n; ++x) {
        if (p_star(x) > support_tol || (v.cols() > 0 && v.row(x).norm() > 1e-12)) x_max.push_back(x);
    }
    return detail::assemble_pi(p_star, v, std::move(x_max), true, constraints, p_star);
}

}  // namespace capcert
