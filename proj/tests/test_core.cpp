#include "fixtures.hpp"

#include <capcert/core.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace capcert;

namespace {

// I(X;Y) = H(Y) - H(Y|X), an evaluation route independent of the library's
// divergence sum.
double entropy_oracle(const Matrix& w, const Vector& p) {
    const Vector q = w.transpose() * p;
    double hy = 0.0;
    for (Eigen::Index y = 0; y < q.size(); ++y) {
        if (q(y) > 0) hy -= q(y) * std::log(q(y));
    }
    double hyx = 0.0;
    for (Eigen::Index x = 0; x < w.rows(); ++x) {
        for (Eigen::Index y = 0; y < w.cols(); ++y) {
            if (w(x, y) > 0) hyx -= p(x) * w(x, y) * std::log(w(x, y));
        }
    }
    return hy - hyx;
}

Distribution random_distribution(Eigen::Index n, Rng& rng) {
    std::exponential_distribution<double> expo(1.0);
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = expo(rng);
    return Distribution(v / v.sum(), 1e-12);
}

}  // namespace

TEST(Distribution, RejectsNegativeMass) {
    EXPECT_THROW(Distribution(Vector::Constant(2, 0.5) + Vector::Unit(2, 0) * 0.1), InvariantError);
    Vector v(2);
    v << 1.2, -0.2;
    EXPECT_THROW(Distribution{v}, InvariantError);
}

TEST(Distribution, ClampsRoundingNoise) {
    Vector v(3);
    v << 0.5, 0.5 + 1e-13, -1e-13;
    const Distribution d(v);
    EXPECT_EQ(d[2], 0.0);
}

TEST(TangentVector, RequiresZeroSum) {
    Vector v(2);
    v << 1.0, -0.5;
    EXPECT_THROW(TangentVector{v}, InvariantError);
    v << 1.0, -1.0;
    EXPECT_NO_THROW(TangentVector{v});
}

TEST(Channel, DropsUnreachableOutputs) {
    Matrix m(2, 3);
    m << 0.5, 0.0, 0.5, 1.0, 0.0, 0.0;
    const Channel ch(m, {"a", "b"}, {"u", "v", "w"});
    EXPECT_EQ(ch.outputs(), 2);
    ASSERT_EQ(ch.dropped_outputs().size(), 1u);
    EXPECT_EQ(ch.dropped_outputs().front(), "v");
    EXPECT_EQ(ch.output_labels(), (std::vector<std::string>{"u", "w"}));
}

TEST(Channel, RejectsBadRows) {
    Matrix m(2, 2);
    m << 0.5, 0.4, 0.5, 0.5;
    EXPECT_THROW(Channel{m}, InvariantError);
    m << 1.5, -0.5, 0.5, 0.5;
    EXPECT_THROW(Channel{m}, InvariantError);
}

TEST(MutualInformation, ClosedForms) {
    EXPECT_NEAR(mutual_information(Channel::identity(2), Distribution::uniform(2)), std::log(2.0), 1e-15);
    EXPECT_NEAR(mutual_information(Channel::bsc(0.1), Distribution::uniform(2)), 0.368064, 1e-6);
    EXPECT_NEAR(mutual_information(Channel::bsc(0.1), Distribution::uniform(2)),
                std::log(2.0) - fixtures::h_e(0.1), 1e-15);
    for (std::uint64_t s = 0; s < 3; ++s) {
        const Channel ch = fixtures::random_channel(s);
        for (Eigen::Index x = 0; x < ch.inputs(); ++x) {
            EXPECT_EQ(mutual_information(ch, Distribution::point_mass(ch.inputs(), x)), 0.0);
        }
    }
}

TEST(MutualInformation, DimensionMismatch) {
    EXPECT_THROW(mutual_information(Channel::bsc(0.1), Distribution::uniform(3)), DimensionError);
}

TEST(MutualInformation, MatchesEntropyOracleAndBounds) {
    Rng rng = make_stream(1, 0);
    for (std::uint64_t s = 0; s < 50; ++s) {
        const Channel ch = fixtures::random_channel(s);
        const Distribution p = random_distribution(ch.inputs(), rng);
        const double i = mutual_information(ch, p);
        EXPECT_NEAR(i, entropy_oracle(ch.rows(), p.mass()), 1e-12);
        EXPECT_GE(i, 0.0);
        EXPECT_LE(i, std::log(static_cast<double>(std::min(ch.inputs(), ch.outputs()))) + 1e-9);
    }
}

TEST(MutualInformation, Concave) {
    Rng rng = make_stream(2, 0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::uint64_t s = 0; s < 50; ++s) {
        const Channel ch = fixtures::random_channel(s);
        const Distribution p = random_distribution(ch.inputs(), rng);
        const Distribution r = random_distribution(ch.inputs(), rng);
        const double lam = unit(rng);
        const Distribution mix(lam * p.mass() + (1 - lam) * r.mass(), 1e-12);
        EXPECT_GE(mutual_information(ch, mix),
                  lam * mutual_information(ch, p) + (1 - lam) * mutual_information(ch, r) - 1e-9);
    }
}

TEST(KlDivergence, Values) {
    const Distribution p = Distribution::uniform(3);
    EXPECT_EQ(kl_divergence(p, p), 0.0);
    EXPECT_NEAR(kl_divergence(Distribution::point_mass(2, 0), Distribution::uniform(2)), std::log(2.0), 1e-15);
    Vector a(2);
    a << 0.3, 0.7;
    EXPECT_NEAR(kl_divergence(Distribution(a), Distribution::uniform(2)), 0.3 * std::log(0.6) + 0.7 * std::log(1.4),
                1e-15);
    EXPECT_NEAR(kl_divergence(Distribution(a), Distribution::uniform(2)), 0.082283, 1e-6);
}

TEST(KlDivergence, SupportViolation) {
    EXPECT_THROW(kl_divergence(Distribution::uniform(2), Distribution::point_mass(2, 0)), SupportError);
}

TEST(OutputDistribution, Examples) {
    Vector p(2);
    p << 0.6, 0.4;
    const Distribution q = output_distribution(Channel::bsc(0.1), Distribution(p));
    EXPECT_NEAR(q[0], 0.58, 1e-15);
    EXPECT_NEAR(q[1], 0.42, 1e-15);
    const Distribution u = Distribution::uniform(4);
    EXPECT_TRUE(output_distribution(Channel::identity(4), u).mass().isApprox(u.mass()));
    const Channel useless = fixtures::from_rows({{0.2, 0.8}, {0.2, 0.8}, {0.2, 0.8}});
    Rng rng = make_stream(3, 0);
    const Distribution q2 = output_distribution(useless, random_distribution(3, rng));
    EXPECT_NEAR(q2[0], 0.2, 1e-15);
}

TEST(KernelBasis, Examples) {
    EXPECT_TRUE(kernel_basis(Channel::identity(2)).empty());
    const auto dup = kernel_basis(fixtures::from_rows({{0.7, 0.3}, {0.7, 0.3}, {0.1, 0.9}}));
    ASSERT_EQ(dup.size(), 1u);
    Vector expected(3);
    expected << 1, -1, 0;
    expected /= std::sqrt(2.0);
    EXPECT_LT((dup.front().delta() - expected).norm(), 1e-12);
    EXPECT_EQ(kernel_basis(fixtures::from_rows({{0.2, 0.8}, {0.2, 0.8}, {0.2, 0.8}})).size(), 2u);
}

TEST(KernelBasis, DirectionsPreserveOutputAndAreAffine) {
    Rng rng = make_stream(4, 0);
    for (std::uint64_t s = 0; s < 50; ++s) {
        const Channel ch = fixtures::random_channel(s);
        const Distribution p = random_distribution(ch.inputs(), rng);
        const Matrix basis = as_matrix(kernel_basis(ch), ch.inputs());
        for (Eigen::Index j = 0; j < basis.cols(); ++j) {
            const Vector v = basis.col(j);
            EXPECT_NEAR(v.norm(), 1.0, 1e-12);
            EXPECT_NEAR(v.sum(), 0.0, 1e-12);
            // largest step keeping p + t v in the simplex, both signs
            double t = std::numeric_limits<double>::infinity();
            for (Eigen::Index x = 0; x < v.size(); ++x) {
                if (std::abs(v(x)) > 1e-14) t = std::min(t, p[x] / std::abs(v(x)));
            }
            t *= 0.9;
            const Vector plus = p.mass() + t * v;
            const Vector minus = p.mass() - t * v;
            EXPECT_LT((ch.rows().transpose() * plus - ch.rows().transpose() * p.mass()).lpNorm<Eigen::Infinity>(), 1e-10);
            const double second = mutual_information(ch, Distribution(plus, 1e-12)) - 2 * mutual_information(ch, p) +
                                  mutual_information(ch, Distribution(minus, 1e-12));
            EXPECT_LE(std::abs(second), 1e-8);
        }
    }
}
