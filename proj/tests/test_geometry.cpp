#include "fixtures.hpp"

#include <capcert/geometry.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace capcert;

namespace {

PiSet pi_of(const Channel& ch) { return capacity_achieving_set(ch, blahut_arimoto(ch, 1e-9)); }

Channel merged() { return fixtures::from_rows({{1, 0}, {1, 0}, {0, 1}}); }

Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

TangentVector unit(std::initializer_list<double> xs) {
    const Vector v = vec(xs);
    return TangentVector(v / v.norm(), 1e-12);
}

Distribution random_point(Eigen::Index n, Rng& rng) {
    std::exponential_distribution<double> expo(1.0);
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = expo(rng);
    return Distribution(v / v.sum(), 1e-12);
}

}  // namespace

TEST(ProjectToPi, Examples) {
    const PiSet bsc = pi_of(Channel::bsc(0.1));
    const auto [p1, d1] = project_to_pi(Distribution(vec({0.6, 0.4})), bsc);
    EXPECT_NEAR(p1[0], 0.5, 1e-12);
    EXPECT_NEAR(d1, 0.1 * std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(d1, 0.141421, 1e-6);

    const PiSet seg = pi_of(merged());
    const auto [p2, d2] = project_to_pi(Distribution(vec({0.1, 0.3, 0.6})), seg);
    EXPECT_LT((p2.mass() - vec({0.15, 0.35, 0.5})).norm(), 1e-9);
    EXPECT_NEAR(d2, 0.122474, 1e-6);

    const auto [p3, d3] = project_to_pi(Distribution(vec({0.2, 0.3, 0.5})), seg);
    EXPECT_EQ(d3, 0.0);
    EXPECT_LT((p3.mass() - vec({0.2, 0.3, 0.5})).norm(), 1e-12);
    EXPECT_THROW(project_to_pi(Distribution::uniform(2), seg), DimensionError);
}

TEST(ProjectToPi, ClampsToSegmentEnd) {
    const PiSet seg = pi_of(merged());
    const auto [p, d] = project_to_pi(Distribution(vec({0.9, 0.0, 0.1})), seg);
    EXPECT_LT((p.mass() - vec({0.5, 0.0, 0.5})).norm(), 1e-9);
    EXPECT_NEAR(d, (vec({0.4, 0.0, -0.4})).norm(), 1e-9);
}

TEST(ProjectToPi, IdempotentAndNonExpansive) {
    auto family = fixtures::duplicate_row_family();
    for (auto& r : fixtures::random_family(20)) family.push_back(r);
    Rng rng = make_stream(5, 0);
    for (const auto& [name, ch] : family) {
        const PiSet pi = pi_of(ch);
        for (int i = 0; i < 50; ++i) {
            const Distribution p = random_point(ch.inputs(), rng);
            const Distribution r = random_point(ch.inputs(), rng);
            const auto [pp, dp] = project_to_pi(p, pi);
            const auto [rp, dr] = project_to_pi(r, pi);
            EXPECT_LT(project_to_pi(pp, pi).second, 1e-9) << name;
            EXPECT_LE((pp.mass() - rp.mass()).norm(), (p.mass() - r.mass()).norm() + 1e-9) << name;
            EXPECT_TRUE(pi.contains(pp.mass(), 1e-9)) << name;
        }
    }
}

TEST(SupportSets, Examples) {
    EXPECT_TRUE(support_sets(Distribution::uniform(3)).x_zero.empty());
    const SupportSets s = support_sets(Distribution(vec({0.5, 0.5, 0.0})));
    EXPECT_EQ(s.x_zero, (std::vector<Eigen::Index>{2}));
    const ConstraintSet cons({vec({0.3, -0.7})}, 2);
    const SupportSets c = support_sets(Distribution(vec({0.7, 0.3})), &cons);
    EXPECT_EQ(c.a_zero, (std::vector<std::size_t>{0}));
    EXPECT_TRUE(c.x_zero.empty());
}

TEST(ValidDirectionCone, SingletonInteriorIsWholeSubspace) {
    const PiSet pi = pi_of(Channel::bsc(0.1));
    const ConeDescription cone = valid_direction_cone(pi, support_sets(pi.representative));
    EXPECT_EQ(cone.equalities.size(), 1u);
    EXPECT_EQ(cone.k_basis.cols(), 0);
    EXPECT_TRUE(cone_membership(unit({1, -1}), cone));
    EXPECT_TRUE(cone_membership(unit({-1, 1}), cone));
    EXPECT_TRUE(cone_membership(TangentVector(Vector::Zero(2)), cone));
}

TEST(ValidDirectionCone, SegmentInteriorIsOrthogonalComplement) {
    const PiSet pi = pi_of(merged());
    const ConeDescription cone = valid_direction_cone(pi, support_sets(pi.representative));
    ASSERT_EQ(cone.equalities.size(), 2u);
    EXPECT_NEAR(std::abs(cone.equalities[1].dot(vec({1, -1, 0}) / std::sqrt(2.0))), 1.0, 1e-10);
    EXPECT_FALSE(cone_membership(unit({1, -1, 0}), cone));
    EXPECT_TRUE(cone_membership(unit({1, 1, -2}), cone));
    EXPECT_TRUE(cone_membership(unit({-1, -1, 2}), cone));
}

TEST(ValidDirectionCone, SegmentEndpointUsesDualCone) {
    const PiSet pi = pi_of(merged());
    const Distribution end(vec({0.5, 0.0, 0.5}));
    const ConeDescription cone = valid_direction_cone(pi, support_sets(end));
    EXPECT_EQ(cone.equalities.size(), 1u);
    EXPECT_EQ(cone.k_rows.rows(), 1);
    EXPECT_TRUE(cone_membership(unit({1, 1, -2}), cone));
    EXPECT_TRUE(cone_membership(unit({2, 1, -3}), cone));
    EXPECT_FALSE(cone_membership(unit({1, 2, -3}), cone));
    EXPECT_FALSE(cone_membership(unit({1, -1, 0}), cone));
    EXPECT_FALSE(cone_membership(unit({-1, 1, 0}), cone));
}

TEST(ValidDirectionCone, DependsOnlyOnSupportSets) {
    const PiSet pi = pi_of(merged());
    const ConeDescription a = valid_direction_cone(pi, support_sets(Distribution(vec({0.1, 0.4, 0.5}))));
    const ConeDescription b = valid_direction_cone(pi, support_sets(Distribution(vec({0.3, 0.2, 0.5}))));
    EXPECT_TRUE(a == b);
}

TEST(ConeMembership, ScaleInvariant) {
    const PiSet pi = pi_of(merged());
    const ConeDescription cone = valid_direction_cone(pi, support_sets(Distribution(vec({0.5, 0.0, 0.5}))));
    Rng rng = make_stream(6, 0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        Vector d(3);
        for (Eigen::Index x = 0; x < 3; ++x) d(x) = gauss(rng);
        d.array() -= d.mean();
        const bool base = cone_membership(TangentVector(d, 1e-12), cone);
        for (double s : {1e-6, 0.5, 3.0, 1e5}) EXPECT_EQ(cone_membership(TangentVector(s * d, 1e-9), cone), base);
    }
}

TEST(SampleValidDirections, AllInTheirCones) {
    auto family = fixtures::duplicate_row_family();
    for (auto& r : fixtures::random_family(15)) family.push_back(r);
    for (const auto& [name, ch] : family) {
        const PiSet pi = pi_of(ch);
        const auto dirs = sample_valid_directions(pi, pi.feasible(), 200, 3);
        ASSERT_EQ(dirs.size(), 200u);
        for (const auto& vd : dirs) {
            EXPECT_NEAR(vd.direction.norm(), 1.0, 1e-12) << name;
            EXPECT_GT(vd.distance, 1e-12) << name;
            const ConeDescription cone = valid_direction_cone(pi, support_sets(vd.base));
            EXPECT_TRUE(cone_membership(vd.direction, cone, 1e-7)) << name;
        }
    }
}

TEST(SampleValidDirections, BscDirectionsAreDiagonal) {
    const PiSet pi = pi_of(Channel::bsc(0.1));
    for (const auto& vd : sample_valid_directions(pi, pi.feasible(), 100, 1)) {
        EXPECT_NEAR(std::abs(vd.direction.delta()(0)), 1.0 / std::sqrt(2.0), 1e-12);
        EXPECT_NEAR(vd.direction.delta()(0), -vd.direction.delta()(1), 1e-12);
    }
}

TEST(SampleValidDirections, Deterministic) {
    const PiSet pi = pi_of(fixtures::random_channel(3));
    const auto a = sample_valid_directions(pi, pi.feasible(), 50, 42);
    const auto b = sample_valid_directions(pi, pi.feasible(), 50, 42);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].direction.delta(), b[i].direction.delta());
        EXPECT_EQ(a[i].base, b[i].base);
    }
}

TEST(SampleValidDirections, DegenerateAndEmpty) {
    const PiSet pi = pi_of(fixtures::from_rows({{0.3, 0.7}, {0.3, 0.7}, {0.3, 0.7}}));
    EXPECT_THROW(sample_valid_directions(pi, pi.feasible(), 10, 0), DegenerateError);
    const PiSet bsc = pi_of(Channel::bsc(0.2));
    EXPECT_THROW(sample_valid_directions(bsc, bsc.feasible(), 0, 0), DomainError);
}

TEST(SampleValidDirections, ConstrainedDirectionsRespectActiveConstraint) {
    const auto ex = fixtures::constrained_examples().front();
    const ConstraintSet cons(ex.constraints, 2);
    const PiSet pi = constrained_pi_set(ex.channel, cons, constrained_capacity(ex.channel, cons));
    for (const auto& vd : sample_valid_directions(pi, pi.feasible(), 100, 2)) {
        // the only feasible way out of (0.7, 0.3) raises p(1)
        EXPECT_GT(vd.direction.delta()(0), 0.0);
        EXPECT_GE(vd.direction.delta().dot(ex.constraints.front()), -1e-12);
    }
}

// Directions of points converging to Pi stay in the cone, including the
// limit taken numerically close to the endpoint of the segment.
TEST(ValidDirectionCone, ClosedUnderLimits) {
    const PiSet pi = pi_of(merged());
    const Vector end = vec({0.5, 0.0, 0.5});
    const ConeDescription cone = valid_direction_cone(pi, support_sets(Distribution(end)));
    Rng rng = make_stream(8, 0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    int tested = 0;
    for (int i = 0; i < 100; ++i) {
        Vector w(3);
        for (Eigen::Index x = 0; x < 3; ++x) w(x) = gauss(rng);
        w.array() -= w.mean();
        w(1) = std::abs(w(1));
        w(2) = -w(0) - w(1);
        for (double eps = 1e-2; eps >= 1e-9; eps *= 0.1) {
            const Vector p = end + eps * w;
            if (p.minCoeff() < 0.0) continue;
            const auto [proj, dist] = project_to_pi(Distribution(p, 1e-12), pi);
            if (dist < 1e-13 || (proj.mass() - end).norm() > 1e-12) continue;
            EXPECT_TRUE(cone_membership(TangentVector::direction(proj.mass(), p), cone, 1e-7));
            ++tested;
        }
    }
    EXPECT_GT(tested, 50);
}

TEST(ProjectToPi, RespectsConstraintOnSegment) {
    const Channel merged = fixtures::from_rows({{1, 0}, {1, 0}, {0, 1}});
    Vector a(3);
    a << -0.8, 0.2, 0.2;
    const ConstraintSet cons({a}, 3);
    const PiSet pi = constrained_pi_set(merged, cons, constrained_capacity(merged, cons, 1e-9));
    Vector p(3);
    p << 0.5, 0.0, 0.5;
    const auto [q, dist] = project_to_pi(Distribution(p), pi);
    EXPECT_NEAR(q[0], 0.2, 1e-8);
    EXPECT_NEAR(q[1], 0.3, 1e-8);
    EXPECT_NEAR(q[2], 0.5, 1e-8);
    EXPECT_NEAR(dist, std::sqrt(0.18), 1e-8);
}
