#pragma once

// Quadratic-decay certificate: constants (alpha, mu) with
//   I_W(p) <= C - alpha ||p - p^Pi||^2   whenever ||p - p^Pi|| <= mu,
// estimated from sampled valid directions and then checked by sampling.

#include "capcert/expansion.hpp"
#include "capcert/geometry.hpp"
#include "capcert/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

namespace capcert {

struct QuadraticCertificate {
    double alpha_hat = 0.0;
    double mu = 0.0;
    TangentVector min_direction;
    Distribution base_point;
    std::size_t sample_count = 0;
    std::uint64_t seed = 0;
    bool constrained = false;
    double capacity = 0.0;  ///< C (or C_A) the bound is measured against
};

struct Violation {
    std::size_t sample = 0;
    Distribution p;
    double rate = 0.0;
    double bound = 0.0;
    double gap = 0.0;  ///< rate - bound
};

struct VerificationReport {
    std::size_t checked = 0;
    std::vector<Violation> violations;
    double max_gap = -std::numeric_limits<double>::infinity();
    bool passed = false;
};

/// alpha(d) = -(<grad, d> + d^T H d) / 2.
inline double alpha_of_direction(const TangentVector& d, const ExpansionData& exp) {
    if (d.size() != exp.nx) throw DimensionError("alpha_of_direction: direction length mismatch");
    const Vector& u = d.delta();
    return -0.5 * (exp.grad.dot(u) + u.dot(exp.half_hessian * u));
}

/// f(mu) = alpha solved in closed form.
inline double compute_mu(double alpha_hat, const ExpansionData& exp) {
    if (!(alpha_hat > 0.0)) throw DomainError("compute_mu: alpha must be positive");
    const double nx = static_cast<double>(exp.nx);
    const double ny = static_cast<double>(exp.ny);
    return alpha_hat * exp.q_min * exp.q_min / (std::sqrt(nx) * (nx * ny + alpha_hat * exp.q_min));
}

namespace detail {

/// Euclidean projection onto a cone of valid directions.
class ConeProjector {
public:
    explicit ConeProjector(ConeDescription cone) : cone_(std::move(cone)) {
        const Eigen::Index n = cone_.equalities.front().size();
        eq_null_ = linalg::null_space(linalg::stack_rows(cone_.equalities, n));
        std::vector<Vector> rows;
        for (Eigen::Index x : cone_.sign_coords) rows.emplace_back(eq_null_.row(x).transpose());
        for (const Vector& a : cone_.sign_vectors) rows.emplace_back(eq_null_.transpose() * a);
        sign_rows_ = linalg::stack_rows(rows, eq_null_.cols());
        dual_active_ = cone_.k_basis.cols() > 0 && cone_.k_rows.rows() > 0;
    }

    [[nodiscard]] const ConeDescription& cone() const { return cone_; }

    [[nodiscard]] Vector project(const Vector& y) const {
        if (!dual_active_) return project_primal(y);
        // Dykstra's alternating projections between the primal polyhedron
        // and the negative dual cone.
        Vector x = y;
        Vector p = Vector::Zero(y.size());
        Vector q = Vector::Zero(y.size());
        for (int it = 0; it < 500; ++it) {
            const Vector a = project_primal(x + p);
            p = x + p - a;
            const Vector b = project_neg_dual(a + q);
            q = a + q - b;
            const double change = (b - x).norm();
            x = b;
            if (change <= 1e-14 * (1.0 + y.norm())) break;
        }
        return x;
    }

private:
    [[nodiscard]] Vector project_primal(const Vector& y) const {
        if (eq_null_.cols() == 0) return Vector::Zero(y.size());
        const Vector z0 = eq_null_.transpose() * y;
        if (sign_rows_.rows() == 0) return eq_null_ * z0;
        const Vector h = Vector::Zero(sign_rows_.rows());
        const qp::Projection proj = qp::project_polyhedron(sign_rows_, h, z0, Vector::Zero(z0.size()));
        return eq_null_ * proj.point;
    }

    // -K* is the polar of K, so Moreau gives y - P_K(y).
    [[nodiscard]] Vector project_neg_dual(const Vector& y) const {
        const Matrix& v = cone_.k_basis;
        const Vector z0 = v.transpose() * y;
        const Vector h = Vector::Zero(cone_.k_rows.rows());
        const qp::Projection proj = qp::project_polyhedron(cone_.k_rows, h, z0, Vector::Zero(z0.size()));
        return y - v * proj.point;
    }

    ConeDescription cone_;
    Matrix eq_null_;
    Matrix sign_rows_;
    bool dual_active_ = false;
};

/// Projected gradient descent of alpha(d) over the unit sphere inside the cone.
inline std::optional<TangentVector> refine_direction(const TangentVector& start, const ConeProjector& proj,
                                                     const ExpansionData& exp) {
    const Vector& g = exp.grad;
    const Matrix& h = exp.half_hessian;
    auto alpha = [&](const Vector& u) { return -0.5 * (g.dot(u) + u.dot(h * u)); };

    Vector d = start.delta();
    double a = alpha(d);
    double eta = 1.0 / (2.0 * h.norm() + 1.0);
    for (int it = 0; it < 300 && eta > 1e-12; ++it) {
        const Vector step = -0.5 * g - h * d;
        Vector c = proj.project(d - eta * step);
        const double norm = c.norm();
        if (norm <= 1e-12) {
            eta *= 0.5;
            continue;
        }
        c /= norm;
        const double ac = alpha(c);
        if (ac < a - 1e-15) {
            d = std::move(c);
            a = ac;
            eta *= 1.5;
        } else {
            eta *= 0.5;
        }
    }
    d.array() -= d.mean();
    d.normalize();
    TangentVector out(d, 1e-10);
    if (!cone_membership(out, proj.cone(), 1e-8)) return std::nullopt;
    return out;
}

}  // namespace detail

struct AlphaEstimate {
    double alpha_hat = 0.0;
    TangentVector min_direction;
    Distribution base_point;
};

/// Minimum of alpha over `samples` sampled valid directions, then refined by
/// projected gradient descent started from the ten best samples.
inline AlphaEstimate estimate_alpha(const Channel& channel, const PiSet& pi, const ExpansionData& exp,
                                    std::size_t samples, std::uint64_t seed) {
    detail::require_inputs(channel, pi.inputs());
    const std::vector<ValidDirection> dirs = sample_valid_directions(pi, pi.feasible(), samples, seed);
    std::vector<double> alphas(dirs.size());
    parallel_for(dirs.size(), [&](std::size_t i) { alphas[i] = alpha_of_direction(dirs[i].direction, exp); });

    std::vector<std::size_t> order(dirs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return alphas[a] < alphas[b]; });

    AlphaEstimate best{alphas[order.front()], dirs[order.front()].direction, dirs[order.front()].base};
    const std::size_t restarts = std::min<std::size_t>(10, order.size());
    const ConstraintSet* cons = pi.constrained && pi.constraint_set ? &*pi.constraint_set : nullptr;
    std::vector<std::optional<AlphaEstimate>> refined(restarts);
    parallel_for(restarts, [&](std::size_t r) {
        const ValidDirection& vd = dirs[order[r]];
        const detail::ConeProjector proj(valid_direction_cone(pi, support_sets(vd.base, cons)));
        if (auto d = detail::refine_direction(vd.direction, proj, exp)) {
            refined[r] = AlphaEstimate{alpha_of_direction(*d, exp), *d, vd.base};
        }
    });
    for (auto& r : refined) {
        if (r && r->alpha_hat < best.alpha_hat) best = std::move(*r);
    }
    if (!(best.alpha_hat > 0.0)) {
        throw CertificateError("estimate_alpha: non-positive decay constant " + std::to_string(best.alpha_hat) +
                               "; the capacity-achieving set is probably misidentified (check support_tol)");
    }
    return best;
}

/// Full certificate: alpha from sampled directions, mu from the envelope.
inline QuadraticCertificate certify(const Channel& channel, const PiSet& pi, const ExpansionData& exp, double capacity,
                                    std::size_t samples, std::uint64_t seed) {
    AlphaEstimate est = estimate_alpha(channel, pi, exp, samples, seed);
    QuadraticCertificate cert;
    cert.alpha_hat = est.alpha_hat;
    cert.mu = compute_mu(est.alpha_hat, exp);
    cert.min_direction = std::move(est.min_direction);
    cert.base_point = std::move(est.base_point);
    cert.sample_count = samples;
    cert.seed = seed;
    cert.constrained = pi.constrained;
    cert.capacity = capacity;
    return cert;
}

namespace detail {

// Largest t >= 0 with p + t u inside the polytope.
inline double max_step(const Vector& p, const Vector& u, const InputPolytope& poly) {
    double t = std::numeric_limits<double>::infinity();
    for (Eigen::Index x = 0; x < p.size(); ++x) {
        if (u(x) < 0.0) t = std::min(t, std::max(0.0, p(x)) / -u(x));
    }
    if (poly.constrained()) {
        for (const Vector& a : poly.constraints->vectors()) {
            const double rate = a.dot(u);
            if (rate < 0.0) t = std::min(t, std::max(0.0, a.dot(p)) / -rate);
        }
    }
    return t;
}

struct Probe {
    Vector p;
    double distance = 0.0;
};

inline std::optional<Probe> make_probe(Vector p, const PiSet& pi) {
    p = p.cwiseMax(0.0);
    p /= p.sum();
    if (!pi.feasible().contains(p, 1e-12)) return std::nullopt;
    const auto [proj, dist] = project_to_pi(Distribution(p, 1e-10), pi);
    return Probe{std::move(p), dist};
}

inline std::optional<Probe> draw_probe(const PiSet& pi, const PolytopeSampler& sampler, double mu, std::size_t index,
                                       Rng& rng) {
    static constexpr std::array<double, 4> kRadial{1.0, 0.5, 0.1, 0.01};
    const std::size_t kind = index % 10;
    const InputPolytope poly = pi.feasible();

    if (kind == 0) {
        for (int attempt = 0; attempt < 32; ++attempt) {
            const Vector raw = sampler.draw(rng, attempt % 2 == 1);
            if (!poly.contains(raw, 1e-9)) continue;
            const auto [member, dist] = project_to_pi(Distribution(raw, 1e-9), pi);
            return Probe{member.mass(), 0.0};
        }
        return std::nullopt;
    }
    if (kind <= kRadial.size()) {
        const auto vd = draw_valid_direction(pi, sampler, rng, index % 2 == 1);
        if (!vd) return std::nullopt;
        const Vector& u = vd->direction.delta();
        const double t = std::min(mu * kRadial[kind - 1], max_step(vd->base.mass(), u, poly));
        auto probe = make_probe(vd->base.mass() + t * u, pi);
        if (probe && probe->distance <= mu) return probe;
        return std::nullopt;
    }

    // Local perturbation of a member of Pi; even kinds stay on the member's face.
    const bool on_face = kind % 2 == 0;
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int attempt = 0; attempt < 64; ++attempt) {
        const Vector raw = sampler.draw(rng, attempt % 2 == 0);
        if (!poly.contains(raw, 1e-9)) continue;
        const Vector member = project_to_pi(Distribution(raw, 1e-9), pi).first.mass();
        Vector u(member.size());
        for (Eigen::Index x = 0; x < u.size(); ++x) u(x) = gauss(rng);
        if (on_face) {
            Eigen::Index live = 0;
            for (Eigen::Index x = 0; x < u.size(); ++x) {
                if (member(x) <= 1e-12) {
                    u(x) = 0.0;
                } else {
                    ++live;
                }
            }
            if (live < 2) continue;
            const double mean = u.sum() / static_cast<double>(live);
            for (Eigen::Index x = 0; x < u.size(); ++x) {
                if (member(x) > 1e-12) u(x) -= mean;
            }
        } else {
            u.array() -= u.mean();
        }
        const double norm = u.norm();
        if (norm <= 1e-12) continue;
        const Vector p = member + (mu * unit(rng) / norm) * u;
        if (p.minCoeff() < 0.0) continue;
        auto probe = make_probe(p, pi);
        if (probe && probe->distance <= mu) return probe;
    }
    return std::nullopt;
}

}  // namespace detail

/// Checks I(p) <= C - alpha ||p - p^Pi||^2 + slack on `samples` points of the
/// mu-neighbourhood of Pi: members of Pi, radial points at distances mu,
/// mu/2, mu/10 and mu/100 along sampled valid directions, and local
/// perturbations (general and face-restricted) of members.
inline VerificationReport verify_theorem(const Channel& channel, const PiSet& pi, const QuadraticCertificate& cert,
                                         std::size_t samples, std::uint64_t seed, double slack = 1e-9) {
    detail::require_inputs(channel, pi.inputs());
    if (!(cert.mu > 0.0)) throw DomainError("verify_theorem: certificate radius must be positive");
    const PolytopeSampler sampler(pi.feasible());

    struct Outcome {
        bool checked = false;
        double rate = 0.0;
        double bound = 0.0;
        Vector p;
    };
    std::vector<Outcome> outcomes(samples);
    // Stream indices are offset so verification never reuses estimation draws.
    const std::uint64_t stream_base = 0x5EEDULL << 40;
    parallel_for(samples, [&](std::size_t i) {
        Rng rng = make_stream(seed, stream_base + i);
        const auto probe = detail::draw_probe(pi, sampler, cert.mu, i, rng);
        if (!probe) return;
        Outcome& o = outcomes[i];
        o.checked = true;
        o.rate = std::max(0.0, detail::rate_unchecked(channel.rows(), probe->p));
        o.bound = cert.capacity - cert.alpha_hat * probe->distance * probe->distance;
        o.p = probe->p;
    });

    VerificationReport report;
    for (std::size_t i = 0; i < samples; ++i) {
        const Outcome& o = outcomes[i];
        if (!o.checked) continue;
        ++report.checked;
        const double gap = o.rate - o.bound;
        report.max_gap = std::max(report.max_gap, gap);
        if (gap > slack) report.violations.push_back(Violation{i, Distribution(o.p, 1e-10), o.rate, o.bound, gap});
    }
    if (report.checked == 0) {
        throw CertificateError("verify_theorem: no sample landed in the mu-neighbourhood; mu = " +
                               std::to_string(cert.mu));
    }
    report.passed = report.violations.empty();
    return report;
}

}  // namespace capcert
