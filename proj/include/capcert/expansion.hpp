#pragma once

// Second-order expansion of the information rate around the
// capacity-achieving set, and the explicit envelope of its remainder.

#include "capcert/capacity.hpp"
#include "capcert/geometry.hpp"

#include <cmath>

namespace capcert {

/// Gradient and half-Hessian of I_W at any point of Pi. Both depend on the
/// point only through q*, so they are shared by every member of Pi.
struct ExpansionData {
    Vector grad;          ///< D(W(.|x) || q*) - 1
    Matrix half_hessian;  ///< -sum_y W(y|x1) W(y|x2) / (2 q*(y)); the Hessian is twice this
    double q_min = 0.0;
    Eigen::Index nx = 0;
    Eigen::Index ny = 0;

    /// Largest t for which the remainder envelope is finite.
    [[nodiscard]] double envelope_pole() const { return q_min / std::sqrt(static_cast<double>(nx)); }
};

inline ExpansionData expansion_at(const Channel& channel, const CapacitySolution& sol) {
    const Vector& q = sol.q_star.mass();
    if (q.size() != channel.outputs()) throw DimensionError("expansion_at: q* does not match the output alphabet");
    if (q.minCoeff() <= 0.0) throw SupportError("expansion_at: q* has a zero entry");
    const Matrix& w = channel.rows();
    ExpansionData e;
    e.grad = detail::row_divergences(w, q).array() - 1.0;
    const Matrix scaled = w * q.cwiseInverse().cwiseSqrt().asDiagonal();
    e.half_hessian = -0.5 * scaled * scaled.transpose();
    e.q_min = q.minCoeff();
    e.nx = channel.inputs();
    e.ny = channel.outputs();
    return e;
}

/// d_Y(y) = sum_x W(y|x) d(x).
inline Vector output_direction(const Channel& channel, const TangentVector& d) {
    detail::require_inputs(channel, d.size());
    return channel.rows().transpose() * d.delta();
}

/// (<grad, D> + D^T H D) / ||D||^2 with D = p - p^Pi.
inline double phi(const Channel& channel, const Distribution& p, const PiSet& pi, const ExpansionData& exp) {
    detail::require_inputs(channel, p.size());
    const auto [proj, dist] = project_to_pi(p, pi);
    if (dist <= 1e-12) throw DomainError("phi: p lies in the capacity-achieving set");
    const Vector delta = p.mass() - proj.mass();
    return (exp.grad.dot(delta) + delta.dot(exp.half_hessian * delta)) / (dist * dist);
}

/// f(t) = (|X||Y| / q_min) * sqrt|X| t / (q_min - sqrt|X| t), for 0 <= t < q_min / sqrt|X|.
inline double remainder_envelope(const ExpansionData& exp, double t) {
    if (!(t >= 0.0) || t >= exp.envelope_pole()) {
        throw DomainError("remainder_envelope: t outside [0, q_min/sqrt|X|)");
    }
    const double s = std::sqrt(static_cast<double>(exp.nx)) * t;
    return static_cast<double>(exp.nx * exp.ny) / exp.q_min * s / (exp.q_min - s);
}

/// rho(t) = I(p* + t d) - C - <grad, d> t - (d^T H d) t^2, evaluated exactly.
inline double taylor_remainder(const Channel& channel, const Distribution& p_star, const TangentVector& d, double t,
                               const ExpansionData& exp, double capacity) {
    detail::require_inputs(channel, p_star.size());
    detail::require_inputs(channel, d.size());
    if (!(t >= 0.0) || t >= exp.envelope_pole()) throw DomainError("taylor_remainder: t outside the envelope domain");
    const Vector p = p_star.mass() + t * d.delta();
    if (p.minCoeff() < -1e-12) throw InfeasibleError("taylor_remainder: p* + t d leaves the simplex");
    const double rate = detail::rate_unchecked(channel.rows(), p.cwiseMax(0.0));
    const Vector& u = d.delta();
    return rate - capacity - exp.grad.dot(u) * t - u.dot(exp.half_hessian * u) * t * t;
}

}  // namespace capcert
