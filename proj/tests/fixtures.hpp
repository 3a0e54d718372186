#pragma once

// Channel families shared by the unit tests and the acceptance runner.

#include <capcert/capacity.hpp>
#include <capcert/core.hpp>
#include <capcert/parallel.hpp>

#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace fixtures {

using capcert::Channel;
using capcert::Matrix;
using capcert::Vector;

struct NamedChannel {
    std::string name;
    Channel channel;
};

struct ConstrainedChannel {
    std::string name;
    Channel channel;
    std::vector<Vector> constraints;
};

/// Binary entropy in nats.
inline double h_e(double p) {
    if (p <= 0.0 || p >= 1.0) return 0.0;
    return -p * std::log(p) - (1.0 - p) * std::log(1.0 - p);
}

inline Channel from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
    Eigen::Index r = 0;
    for (const auto& row : rows) {
        Eigen::Index c = 0;
        for (double v : row) m(r, c++) = v;
        ++r;
    }
    return Channel(m);
}

inline std::vector<NamedChannel> bsc_family() {
    std::vector<NamedChannel> out;
    for (double d : {0.05, 0.1, 0.2, 0.3}) out.push_back({"bsc-" + std::to_string(d), Channel::bsc(d)});
    return out;
}

inline std::vector<NamedChannel> identity_family() {
    std::vector<NamedChannel> out;
    for (int n = 2; n <= 6; ++n) out.push_back({"identity-" + std::to_string(n), Channel::identity(n)});
    return out;
}

/// Channels with repeated input rows, so that Ker(W) is non-trivial and the
/// capacity-achieving set is a segment or a polygon.
inline std::vector<NamedChannel> duplicate_row_family() {
    return {
        {"merged-binary", from_rows({{1, 0}, {1, 0}, {0, 1}})},
        {"duplicate-noisy", from_rows({{0.7, 0.2, 0.1}, {0.7, 0.2, 0.1}, {0.1, 0.3, 0.6}})},
        {"duplicate-pairs", from_rows({{0.9, 0.1}, {0.9, 0.1}, {0.2, 0.8}, {0.2, 0.8}})},
        {"triple-erasure", from_rows({{0.8, 0.2, 0.0}, {0.8, 0.2, 0.0}, {0.8, 0.2, 0.0}, {0.0, 0.2, 0.8}})},
    };
}

/// Rows drawn from a flat Dirichlet; |X| and |Y| in [2, 5].
inline Channel random_channel(std::uint64_t seed) {
    capcert::Rng rng = capcert::make_stream(seed, 7);
    std::uniform_int_distribution<int> size(2, 5);
    const int nx = size(rng);
    const int ny = size(rng);
    std::exponential_distribution<double> expo(1.0);
    Matrix m(nx, ny);
    for (int x = 0; x < nx; ++x) {
        for (int y = 0; y < ny; ++y) m(x, y) = expo(rng);
        m.row(x) /= m.row(x).sum();
    }
    return Channel(m);
}

inline std::vector<NamedChannel> random_family(int count, std::uint64_t seed = 2024) {
    std::vector<NamedChannel> out;
    for (int i = 0; i < count; ++i) {
        out.push_back({"random-" + std::to_string(i), random_channel(seed + static_cast<std::uint64_t>(i))});
    }
    return out;
}

/// Identity on two inputs with p(2) <= 0.3, and the BSC with a slack constraint.
inline std::vector<ConstrainedChannel> constrained_examples() {
    Vector a1(2);
    a1 << 0.3, -0.7;
    Vector a2(2);
    a2 << 0.6, -0.4;
    return {{"identity-2-capped", Channel::identity(2), {a1}}, {"bsc-0.1-slack", Channel::bsc(0.1), {a2}}};
}

/// 1 to 3 halfspaces, each with an interior point at margin 0.05.
inline ConstrainedChannel random_constrained(std::uint64_t seed) {
    Channel ch = random_channel(seed);
    capcert::Rng rng = capcert::make_stream(seed, 11);
    const Eigen::Index n = ch.inputs();
    std::exponential_distribution<double> expo(1.0);
    Vector p0(n);
    for (Eigen::Index i = 0; i < n; ++i) p0(i) = expo(rng);
    p0 /= p0.sum();
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_int_distribution<int> how_many(1, 3);
    std::vector<Vector> cons;
    const int k = how_many(rng);
    for (int j = 0; j < k; ++j) {
        Vector a(n);
        for (Eigen::Index i = 0; i < n; ++i) a(i) = gauss(rng);
        a.array() -= a.dot(p0) - 0.05 * a.norm();
        cons.push_back(a);
    }
    return {"random-constrained-" + std::to_string(seed), std::move(ch), std::move(cons)};
}

}  // namespace fixtures
