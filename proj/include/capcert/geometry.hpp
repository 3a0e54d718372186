#pragma once

// Projection onto the capacity-achieving set, support / active-constraint
// sets, and the polyhedral cone of valid directions at a point of Pi.
//
// At p* in Pi the cone of directions d with p* + d projecting back to p* is
//
//   {d : sum d = 0, d(x) >= 0 on X0, <d,a> >= 0 on A0}  intersected with  -K*,
//   K = {v in V : v(x) >= 0 on X0, <v,a> >= 0 on A0},
//
// and depends on p* only through (X0, A0).

#include "capcert/capacity.hpp"
#include "capcert/parallel.hpp"
#include "capcert/qp.hpp"

#include <random>
#include <utility>
#include <vector>

namespace capcert {

inline constexpr double kZeroTolerance = 1e-9;

/// Euclidean projection onto Pi (or Pi^A) and the distance to it.
inline std::pair<Distribution, double> project_to_pi(const Distribution& p, const PiSet& pi) {
    if (p.size() != pi.inputs()) throw DimensionError("project_to_pi: alphabet mismatch");
    const Vector& rep = pi.representative.mass();
    const Eigen::Index k = pi.dimension();
    if (k == 0) return {pi.representative, (p.mass() - rep).norm()};
    if (pi.contains(p.mass(), 1e-12)) return {p, 0.0};

    const Matrix v = pi.basis();
    std::vector<Vector> rows;
    std::vector<double> rhs;
    for (Eigen::Index x = 0; x < v.rows(); ++x) {
        if (v.row(x).norm() <= 1e-12) continue;
        rows.emplace_back(v.row(x).transpose());
        rhs.push_back(-rep(x));
    }
    if (pi.constrained && pi.constraint_set) {
        for (const Vector& a : pi.constraint_set->vectors()) {
            Vector g = v.transpose() * a;
            if (g.norm() <= 1e-12 * std::max(1.0, a.norm())) continue;
            rows.push_back(std::move(g));
            rhs.push_back(-a.dot(rep));
        }
    }
    const Matrix g = linalg::stack_rows(rows, k);
    const Vector h = Eigen::Map<const Vector>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
    const Vector target = v.transpose() * (p.mass() - rep);
    const qp::Projection proj = qp::project_polyhedron(g, h, target, Vector::Zero(k));
    const std::optional<Vector> point = detail::clean_distribution(rep + v * proj.point, 1e-10);
    if (!point) throw SolverError("project_to_pi: projection left the simplex");
    Distribution out(*point, 1e-10);
    const double dist = (p.mass() - out.mass()).norm();
    return {std::move(out), dist};
}

struct SupportSets {
    std::vector<Eigen::Index> x_zero;  ///< inputs with p*(x) = 0
    std::vector<std::size_t> a_zero;   ///< indices of constraints with <a, p*> = 0
};

inline SupportSets support_sets(const Distribution& p_star, const ConstraintSet* constraints = nullptr,
                                double tol = kZeroTolerance) {
    SupportSets s;
    for (Eigen::Index x = 0; x < p_star.size(); ++x) {
        if (std::abs(p_star[x]) <= tol) s.x_zero.push_back(x);
    }
    if (constraints != nullptr) {
        for (std::size_t i = 0; i < constraints->size(); ++i) {
            if (std::abs(constraints->vectors()[i].dot(p_star.mass())) <= tol) s.a_zero.push_back(i);
        }
    }
    return s;
}

/// Cone of valid directions at a point of Pi.
///
/// The lineality space of K is folded into `equalities`; the remaining
/// dual-cone condition is checked by LP against `k_basis` / `k_rows`, where
/// K = {k_basis z : k_rows z >= 0}.
struct ConeDescription {
    std::vector<Vector> equalities;          ///< first entry is the all-ones vector
    std::vector<Eigen::Index> sign_coords;   ///< X0
    std::vector<Vector> sign_vectors;        ///< A0
    Matrix k_basis;
    Matrix k_rows;

    friend bool operator==(const ConeDescription& a, const ConeDescription& b) {
        if (a.equalities.size() != b.equalities.size() || a.sign_vectors.size() != b.sign_vectors.size()) return false;
        for (std::size_t i = 0; i < a.equalities.size(); ++i) {
            if (a.equalities[i] != b.equalities[i]) return false;
        }
        for (std::size_t i = 0; i < a.sign_vectors.size(); ++i) {
            if (a.sign_vectors[i] != b.sign_vectors[i]) return false;
        }
        return a.sign_coords == b.sign_coords && a.k_basis == b.k_basis && a.k_rows == b.k_rows;
    }
};

inline ConeDescription valid_direction_cone(const PiSet& pi, const SupportSets& sets) {
    const Eigen::Index n = pi.inputs();
    const Matrix v = pi.basis();
    ConeDescription cone;
    cone.equalities.push_back(Vector::Ones(n));
    cone.sign_coords = sets.x_zero;
    std::vector<Vector> k_rows;
    for (Eigen::Index x : sets.x_zero) {
        if (v.cols() > 0 && v.row(x).norm() > 1e-12) k_rows.emplace_back(v.row(x).transpose());
    }
    for (std::size_t i : sets.a_zero) {
        if (!pi.constraint_set || i >= pi.constraint_set->size()) throw DimensionError("valid_direction_cone: bad A0 index");
        const Vector& a = pi.constraint_set->vectors()[i];
        cone.sign_vectors.push_back(a);
        if (v.cols() > 0) {
            Vector g = v.transpose() * a;
            if (g.norm() > 1e-12 * std::max(1.0, a.norm())) k_rows.push_back(std::move(g));
        }
    }
    cone.k_basis = v;
    cone.k_rows = linalg::stack_rows(k_rows, v.cols());
    if (v.cols() > 0) {
        const Matrix lineality = v * linalg::null_space(cone.k_rows);
        for (Eigen::Index j = 0; j < lineality.cols(); ++j) {
            Vector e = lineality.col(j);
            linalg::canonical_sign(e);
            cone.equalities.push_back(std::move(e));
        }
    }
    return cone;
}

/// Membership of d in the cone, up to `tol` on the unit-normalised d.
inline bool cone_membership(const TangentVector& d, const ConeDescription& cone, double tol = 1e-9) {
    const double norm = d.norm();
    if (norm <= tol) return true;
    const Vector u = d.delta() / norm;
    for (const Vector& e : cone.equalities) {
        if (std::abs(u.dot(e)) > tol * e.norm()) return false;
    }
    for (Eigen::Index x : cone.sign_coords) {
        if (u(x) < -tol) return false;
    }
    for (const Vector& a : cone.sign_vectors) {
        if (u.dot(a) < -tol * a.norm()) return false;
    }
    const Eigen::Index k = cone.k_basis.cols();
    if (k == 0 || cone.k_rows.rows() == 0) return true;

    // max <u, V z>  s.t.  M z >= 0,  -1 <= (V z)_i <= 1.
    lp::LinearProgram prog;
    prog.objective = cone.k_basis.transpose() * u;
    prog.free_variables.assign(static_cast<std::size_t>(k), true);
    for (Eigen::Index r = 0; r < cone.k_rows.rows(); ++r) {
        prog.add_row(cone.k_rows.row(r).transpose(), lp::Relation::GreaterEqual, 0.0);
    }
    for (Eigen::Index x = 0; x < cone.k_basis.rows(); ++x) {
        if (cone.k_basis.row(x).norm() <= 1e-14) continue;
        prog.add_row(cone.k_basis.row(x).transpose(), lp::Relation::LessEqual, 1.0);
        prog.add_row(cone.k_basis.row(x).transpose(), lp::Relation::GreaterEqual, -1.0);
    }
    const lp::Solution sol = lp::solve(prog);
    if (sol.status != lp::Status::Optimal) throw SolverError("cone_membership: dual-cone LP failed");
    return sol.value <= tol;
}

/// Draws from the feasible input polytope. Without constraints: uniform
/// Dirichlet on the simplex, or on a random proper face when
/// `boundary` is set. With constraints: hit-and-run from an interior centre,
/// ending on a chord endpoint when `boundary` is set.
class PolytopeSampler {
public:
    explicit PolytopeSampler(InputPolytope poly) : poly_(std::move(poly)) {
        if (poly_.constrained()) center_ = chebyshev_center();
    }

    [[nodiscard]] const InputPolytope& polytope() const { return poly_; }

    Vector draw(Rng& rng, bool boundary) const {
        return poly_.constrained() ? hit_and_run(rng, boundary) : dirichlet(rng, boundary);
    }

private:
    Vector dirichlet(Rng& rng, bool boundary) const {
        const Eigen::Index n = poly_.inputs;
        std::vector<bool> on(static_cast<std::size_t>(n), true);
        if (boundary && n > 1) {
            std::uniform_int_distribution<Eigen::Index> size_dist(1, n - 1);
            const Eigen::Index keep = size_dist(rng);
            std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
            for (Eigen::Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
            std::shuffle(idx.begin(), idx.end(), rng);
            std::fill(on.begin(), on.end(), false);
            for (Eigen::Index i = 0; i < keep; ++i) on[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])] = true;
        }
        std::exponential_distribution<double> expo(1.0);
        Vector p = Vector::Zero(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (on[static_cast<std::size_t>(i)]) p(i) = expo(rng);
        }
        return p / p.sum();
    }

    Vector chebyshev_center() const {
        const Eigen::Index n = poly_.inputs;
        lp::LinearProgram prog;
        prog.objective = Vector::Zero(n + 1);
        prog.objective(n) = 1.0;
        Vector ones = Vector::Zero(n + 1);
        ones.head(n).setOnes();
        prog.add_row(ones, lp::Relation::Equal, 1.0);
        for (Eigen::Index x = 0; x < n; ++x) {
            Vector row = Vector::Zero(n + 1);
            row(x) = 1.0;
            row(n) = -1.0;
            prog.add_row(row, lp::Relation::GreaterEqual, 0.0);
        }
        for (const Vector& a : poly_.constraints->vectors()) {
            Vector row(n + 1);
            row.head(n) = a;
            row(n) = -a.norm();
            prog.add_row(row, lp::Relation::GreaterEqual, 0.0);
        }
        const lp::Solution sol = lp::solve(prog);
        if (sol.status != lp::Status::Optimal) throw SolverError("sampler: no interior point");
        return sol.x.head(n);
    }

    // Feasible step interval [lo, hi] of p + t u.
    std::pair<double, double> chord(const Vector& p, const Vector& u) const {
        double lo = -std::numeric_limits<double>::infinity();
        double hi = std::numeric_limits<double>::infinity();
        auto cut = [&](double value, double rate) {
            if (std::abs(rate) < 1e-15) return;
            const double t = -value / rate;
            if (rate > 0.0) {
                lo = std::max(lo, t);
            } else {
                hi = std::min(hi, t);
            }
        };
        for (Eigen::Index x = 0; x < p.size(); ++x) cut(p(x), u(x));
        for (const Vector& a : poly_.constraints->vectors()) cut(a.dot(p), a.dot(u));
        return {lo, hi};
    }

    Vector hit_and_run(Rng& rng, bool boundary) const {
        const Eigen::Index n = poly_.inputs;
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        Vector p = center_;
        const int steps = 10 * static_cast<int>(n) + 20;
        for (int s = 0; s < steps; ++s) {
            Vector u(n);
            for (Eigen::Index i = 0; i < n; ++i) u(i) = gauss(rng);
            u.array() -= u.mean();
            if (u.norm() == 0.0) continue;
            u.normalize();
            const auto [lo, hi] = chord(p, u);
            if (!(hi > lo)) continue;
            const bool last = s + 1 == steps;
            double t = lo + (hi - lo) * unit(rng);
            if (last && boundary) t = unit(rng) < 0.5 ? lo : hi;
            p += t * u;
        }
        p = p.cwiseMax(0.0);
        return p / p.sum();
    }

    InputPolytope poly_;
    Vector center_;
};

struct ValidDirection {
    Distribution base;        ///< p* = projection of `source` onto Pi
    TangentVector direction;  ///< (source - p*) / ||source - p*||
    Distribution source;
    double distance = 0.0;
};

namespace detail {

inline std::optional<ValidDirection> draw_valid_direction(const PiSet& pi, const PolytopeSampler& sampler, Rng& rng,
                                                          bool boundary) {
    for (int attempt = 0; attempt < 64; ++attempt) {
        const Vector raw = sampler.draw(rng, boundary);
        if (!sampler.polytope().contains(raw, 1e-9)) continue;
        Distribution p(raw, 1e-9);
        auto [proj, dist] = project_to_pi(p, pi);
        if (dist < 1e-12) continue;
        TangentVector d = TangentVector::direction(proj.mass(), p.mass());
        return ValidDirection{std::move(proj), std::move(d), std::move(p), dist};
    }
    return std::nullopt;
}

}  // namespace detail

/// `count` valid directions (p*, d) drawn from `feasible`; sample i uses its
/// own stream derived from (seed, i), odd indices are boundary-biased.
/// Throws DegenerateError when draws keep landing in Pi.
inline std::vector<ValidDirection> sample_valid_directions(const PiSet& pi, const InputPolytope& feasible,
                                                           std::size_t count, std::uint64_t seed) {
    if (count == 0) throw DomainError("sample_valid_directions: count must be at least 1");
    const PolytopeSampler sampler(feasible);
    std::vector<std::optional<ValidDirection>> slots(count);
    parallel_for(count, [&](std::size_t i) {
        Rng rng = make_stream(seed, i);
        slots[i] = detail::draw_valid_direction(pi, sampler, rng, i % 2 == 1);
        if (!slots[i]) {
            // one more try in the other sampling mode before declaring Pi == feasible set
            slots[i] = detail::draw_valid_direction(pi, sampler, rng, i % 2 == 0);
        }
        if (!slots[i]) throw DegenerateError("no valid directions: the capacity-achieving set fills the feasible polytope");
    });
    std::vector<ValidDirection> out;
    out.reserve(count);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

}  // namespace capcert
