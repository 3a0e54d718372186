#pragma once

// End-to-end commands behind the capcert executable. Each returns the JSON
// report (or CSV text) and leaves process concerns to the caller.

#include "capcert/capacity.hpp"
#include "capcert/certify.hpp"
#include "capcert/channel_file.hpp"
#include "capcert/expansion.hpp"
#include "capcert/geometry.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace capcert {

enum ExitCode : int { kExitPass = 0, kExitViolation = 1, kExitParse = 2, kExitSolver = 3 };

struct RunOptions {
    double tol = 1e-9;
    double support_tol = 1e-7;
    std::size_t samples = 10000;
    std::uint64_t seed = 0;
    double slack = 1e-9;
};

struct CommandResult {
    nlohmann::json report;
    int exit_code = kExitPass;
};

/// Violations beyond this many are counted but not listed in the report.
inline constexpr std::size_t kReportedViolations = 100;

namespace detail {

inline std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

struct Solved {
    Channel channel;
    std::optional<ConstraintSet> constraints;
    CapacitySolution solution;
};

inline Solved solve_capacity(const ChannelSpecFile& spec, const RunOptions& opts) {
    Solved s{spec.channel(), std::nullopt, {}};
    if (spec.has_constraints()) {
        s.constraints = spec.constraints();
        s.solution = constrained_capacity(s.channel, *s.constraints, opts.tol);
    } else {
        s.solution = blahut_arimoto(s.channel, opts.tol);
    }
    return s;
}

inline nlohmann::json capacity_block(const Solved& s) {
    nlohmann::json j;
    j["C"] = s.solution.capacity;
    j["q_star"] = to_std(s.solution.q_star.mass());
    j["p_witness"] = to_std(s.solution.p_witness.mass());
    j["residual"] = s.solution.residual;
    j["iterations"] = s.solution.iterations;
    j["constrained"] = s.solution.constrained;
    j["outputs"] = s.channel.output_labels();
    j["dropped_outputs"] = s.channel.dropped_outputs();
    return j;
}

inline nlohmann::json pi_block(const Channel& channel, const PiSet& pi) {
    nlohmann::json j;
    std::vector<std::string> labels;
    for (Eigen::Index x : pi.x_max) labels.push_back(channel.input_labels()[static_cast<std::size_t>(x)]);
    j["x_max"] = labels;
    j["dim_V"] = pi.dimension();
    nlohmann::json basis = nlohmann::json::array();
    for (const TangentVector& v : pi.v_basis) basis.push_back(to_std(v.delta()));
    j["v_basis"] = basis;
    j["representative"] = to_std(pi.representative.mass());
    return j;
}

inline PiSet pi_for(const Solved& s, const RunOptions& opts) {
    return s.constraints ? constrained_pi_set(s.channel, *s.constraints, s.solution, opts.support_tol)
                         : capacity_achieving_set(s.channel, s.solution, opts.support_tol);
}

inline std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

}  // namespace detail

inline CommandResult cmd_capacity(const ChannelSpecFile& spec, const RunOptions& opts = {}) {
    const detail::Solved s = detail::solve_capacity(spec, opts);
    nlohmann::json report;
    if (spec.name) report["name"] = *spec.name;
    report["capacity"] = detail::capacity_block(s);
    return {report, kExitPass};
}

inline CommandResult cmd_certify(const ChannelSpecFile& spec, const RunOptions& opts = {}) {
    const detail::Solved s = detail::solve_capacity(spec, opts);
    const PiSet pi = detail::pi_for(s, opts);
    nlohmann::json report;
    if (spec.name) report["name"] = *spec.name;
    report["capacity"] = detail::capacity_block(s);
    report["pi"] = detail::pi_block(s.channel, pi);

    const ExpansionData exp = expansion_at(s.channel, s.solution);
    QuadraticCertificate cert;
    try {
        cert = certify(s.channel, pi, exp, s.solution.capacity, opts.samples, opts.seed);
    } catch (const DegenerateError& e) {
        report["certificate"] = nullptr;
        report["verification"] = nullptr;
        report["status"] = "degenerate";
        report["message"] = e.what();
        return {report, kExitPass};
    }
    const VerificationReport ver = verify_theorem(s.channel, pi, cert, opts.samples, opts.seed, opts.slack);

    nlohmann::json c;
    c["alpha_hat"] = cert.alpha_hat;
    c["mu"] = cert.mu;
    c["min_direction"] = detail::to_std(cert.min_direction.delta());
    c["base_point"] = detail::to_std(cert.base_point.mass());
    c["q_min"] = exp.q_min;
    c["samples"] = cert.sample_count;
    c["seed"] = cert.seed;
    c["constrained"] = cert.constrained;
    report["certificate"] = c;

    nlohmann::json v;
    v["checked"] = ver.checked;
    v["slack"] = opts.slack;
    v["max_gap"] = ver.max_gap;
    v["violation_count"] = ver.violations.size();
    nlohmann::json list = nlohmann::json::array();
    for (std::size_t i = 0; i < ver.violations.size() && i < kReportedViolations; ++i) {
        const Violation& viol = ver.violations[i];
        list.push_back({{"sample", viol.sample},
                        {"p", detail::to_std(viol.p.mass())},
                        {"I", viol.rate},
                        {"bound", viol.bound},
                        {"gap", viol.gap}});
    }
    v["violations"] = list;
    v["status"] = ver.passed ? "pass" : "fail";
    report["verification"] = v;
    report["status"] = ver.passed ? "pass" : "fail";
    return {report, ver.passed ? kExitPass : kExitViolation};
}

struct ScanOptions {
    std::size_t direction_index = 0;
    std::optional<std::vector<double>> direction;  ///< overrides direction_index
    std::vector<double> t_grid;
};

/// Parses "start:stop:count" or a comma-separated list.
inline std::vector<double> parse_t_grid(const std::string& text) {
    auto number = [&](const std::string& s) {
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size()) throw ParseError("");
            return v;
        } catch (const std::exception&) {
            throw ParseError("bad number '" + s + "' in t-grid");
        }
    };
    std::vector<std::string> parts;
    const char sep = text.find(':') != std::string::npos ? ':' : ',';
    std::stringstream in(text);
    for (std::string tok; std::getline(in, tok, sep);) parts.push_back(tok);
    std::vector<double> grid;
    if (sep == ':') {
        if (parts.size() != 3) throw ParseError("t-grid range must be start:stop:count");
        const double a = number(parts[0]);
        const double b = number(parts[1]);
        const double n = number(parts[2]);
        if (n < 1 || n != std::floor(n)) throw ParseError("t-grid count must be a positive integer");
        const auto count = static_cast<std::size_t>(n);
        for (std::size_t i = 0; i < count; ++i) {
            grid.push_back(count == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
        }
    } else {
        for (const auto& p : parts) grid.push_back(number(p));
    }
    if (grid.empty()) throw ParseError("empty t-grid");
    return grid;
}

/// CSV with columns t, I, model, bound, status. `model` is the second-order
/// expansion C + <grad,d> t + d^T H d t^2 and `bound` the envelope f(t) t^2.
inline std::string cmd_scan(const ChannelSpecFile& spec, const ScanOptions& scan, const RunOptions& opts = {}) {
    const detail::Solved s = detail::solve_capacity(spec, opts);
    const PiSet pi = detail::pi_for(s, opts);
    const ExpansionData exp = expansion_at(s.channel, s.solution);
    const InputPolytope poly = pi.feasible();

    Distribution base;
    TangentVector d;
    if (scan.direction) {
        if (static_cast<Eigen::Index>(scan.direction->size()) != s.channel.inputs()) {
            throw ParseError("scan direction has the wrong length");
        }
        Vector u = Eigen::Map<const Vector>(scan.direction->data(), static_cast<Eigen::Index>(scan.direction->size()));
        if (std::abs(u.sum()) > 1e-9 * std::max(1.0, u.lpNorm<1>())) throw ParseError("scan direction must sum to zero");
        u.array() -= u.mean();
        if (u.norm() == 0.0) throw ParseError("scan direction is zero");
        d = TangentVector(u / u.norm(), 1e-10);
        base = pi.representative;
    } else {
        const auto dirs = sample_valid_directions(pi, poly, scan.direction_index + 1, opts.seed);
        base = dirs.back().base;
        d = dirs.back().direction;
    }
    const double slope = exp.grad.dot(d.delta());
    const double curvature = d.delta().dot(exp.half_hessian * d.delta());

    std::ostringstream out;
    out << "t,I,model,bound,status\n";
    for (double t : scan.t_grid) {
        const double model = s.solution.capacity + slope * t + curvature * t * t;
        const Vector p = base.mass() + t * d.delta();
        const bool feasible = t >= 0.0 && poly.contains(p, 1e-12);
        const bool in_domain = t >= 0.0 && t < exp.envelope_pole();
        out << detail::format_number(t) << ',';
        if (feasible) out << detail::format_number(detail::rate_unchecked(s.channel.rows(), p.cwiseMax(0.0)));
        out << ',' << detail::format_number(model) << ',';
        if (in_domain) out << detail::format_number(remainder_envelope(exp, t) * t * t);
        out << ',' << (!feasible ? "infeasible" : in_domain ? "ok" : "out-of-domain") << '\n';
    }
    return out.str();
}

/// Short human-readable digest of a report; values converted to bits on request.
inline std::string summarize(const nlohmann::json& report, bool bits) {
    const double unit = bits ? 1.0 / std::log(2.0) : 1.0;
    const char* name = bits ? "bits" : "nats";
    std::ostringstream out;
    out.precision(10);
    if (report.contains("name")) out << report["name"].get<std::string>() << '\n';
    const auto& cap = report["capacity"];
    out << "capacity: " << cap["C"].get<double>() * unit << ' ' << name << " (residual "
        << cap["residual"].get<double>() * unit << ")\n";
    if (report.contains("pi")) {
        out << "capacity-achieving set: " << report["pi"]["x_max"].size() << " support inputs, dim V = "
            << report["pi"]["dim_V"].get<long>() << '\n';
    }
    if (report.contains("certificate") && !report["certificate"].is_null()) {
        const auto& c = report["certificate"];
        out << "alpha_hat: " << c["alpha_hat"].get<double>() * unit << ' ' << name << ", mu: " << c["mu"].get<double>()
            << '\n';
        const auto& v = report["verification"];
        out << "verification: " << v["checked"].get<std::size_t>() << " checked, "
            << v["violation_count"].get<std::size_t>() << " violations, max gap " << v["max_gap"].get<double>() * unit
            << ' ' << name << '\n';
    }
    if (report.contains("status")) out << "status: " << report["status"].get<std::string>() << '\n';
    return out.str();
}

}  // namespace capcert
