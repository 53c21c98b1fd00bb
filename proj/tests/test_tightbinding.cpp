#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "honeycomb/tightbinding.hpp"
#include "oracles.hpp"

using namespace honeycomb;

namespace {

constexpr double pi = std::numbers::pi;

const LatticeVectors& nominal() {
    static const LatticeVectors g = build_geometry(BeamConfig{});
    return g;
}

bool same_point_set(const std::vector<Vec2>& a, const std::vector<Vec2>& b, double tol) {
    auto covered = [&](const std::vector<Vec2>& from, const std::vector<Vec2>& to) {
        for (const auto& p : from) {
            bool hit = false;
            for (const auto& q : to) hit = hit || nominal().zone_distance(p, q) <= tol;
            if (!hit) return false;
        }
        return true;
    };
    return covered(a, b) && covered(b, a);
}

}  // namespace

TEST(TbBands, GammaBalanced) {
    const auto [lo, hi] = tb_bands(Vec2::Zero(), HoppingSet::balanced(), nominal().c);
    EXPECT_NEAR(lo, -3.0, 1e-14);
    EXPECT_NEAR(hi, 3.0, 1e-14);
}

TEST(TbBands, ComplexUnitHoppingAtGamma) {
    const auto [lo, hi] = tb_bands(Vec2::Zero(), HoppingSet::balanced(std::polar(0.7, 1.1)), nominal().c);
    EXPECT_NEAR(hi, 2.1, 1e-14);
    EXPECT_NEAR(lo, -2.1, 1e-14);
}

TEST(TbBands, DegenerateAtK) {
    const auto [lo, hi] = tb_bands(nominal().K, HoppingSet::balanced(), nominal().c);
    EXPECT_NEAR(lo, 0.0, 1e-14);
    EXPECT_NEAR(hi, 0.0, 1e-14);
}

TEST(TbBands, MassGapAtK) {
    HoppingSet h = HoppingSet::balanced();
    h.epsilon = 0.3;
    const auto [lo, hi] = tb_bands(nominal().K, h, nominal().c);
    EXPECT_NEAR(lo, -0.3, 1e-14);
    EXPECT_NEAR(hi, 0.3, 1e-14);
}

TEST(TbBands, StructureFactorAgainstOracle) {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 100; ++i) {
        const HoppingSet h = oracle::random_hops(rng);
        const Vec2 k(u(rng), u(rng));
        EXPECT_NEAR(std::abs(structure_factor(k, h, nominal().c) - oracle::z_of(k, h, nominal())), 0.0, 1e-13);
    }
}

TEST(DiracPoints, BalancedAtCorners) {
    const auto d = tb_dirac_points(HoppingSet::balanced());
    ASSERT_TRUE(d.has_value());
    EXPECT_FALSE(d->merged);
    EXPECT_TRUE(same_point_set({d->k, d->kp}, {nominal().K, nominal().Kp}, 1e-12));
}

TEST(DiracPoints, WeakFirstHoppingLimit) {
    const auto d = tb_dirac_points(HoppingSet::one_imbalanced(1e-7));
    ASSERT_TRUE(d.has_value());
    EXPECT_TRUE(same_point_set({d->k, d->kp}, {Vec2(0.0, 0.75), Vec2(0.0, -0.75)}, 1e-6));
}

TEST(DiracPoints, NoneBeyondTwo) { EXPECT_FALSE(tb_dirac_points(HoppingSet::one_imbalanced(2.5)).has_value()); }

TEST(DiracPoints, MergeAtMidEdge) {
    const auto d = tb_dirac_points(HoppingSet::one_imbalanced(2.0));
    ASSERT_TRUE(d.has_value());
    EXPECT_TRUE(d->merged);
    const Vec2 mid = (nominal().b2 - nominal().b1) / 2.0;
    EXPECT_NEAR(nominal().zone_distance(d->k, mid), 0.0, 1e-6);
    EXPECT_NEAR(nominal().zone_distance(d->kp, mid), 0.0, 1e-6);
}

TEST(DiracPoints, GammaTrajectory) {
    for (double gamma : {0.25, 0.5, 1.0, 1.5, 2.0}) {
        const auto d = tb_dirac_points(HoppingSet::one_imbalanced(gamma));
        ASSERT_TRUE(d.has_value());
        for (const Vec2& k : {d->k, d->kp}) {
            // k = phi0 (b2 - b1) means k.a2 = 2 pi phi0 = -k.a1 (mod 2 pi)
            EXPECT_NEAR(std::cos(k.dot(nominal().a2)), -gamma / 2.0, 1e-9);
            EXPECT_NEAR(std::sin(k.dot(nominal().a2) + k.dot(nominal().a1)), 0.0, 1e-9);
            EXPECT_NEAR(std::cos(k.dot(nominal().a2) + k.dot(nominal().a1)), 1.0, 1e-9);
        }
    }
}

TEST(DiracPoints, NonzeroMassRejected) {
    HoppingSet h = HoppingSet::balanced();
    h.epsilon = 0.1;
    EXPECT_THROW(tb_dirac_points(h), NonzeroMass);
}

TEST(DiracPoints, AllZeroRejected) {
    HoppingSet h{{cplx(0.0), cplx(0.0), cplx(0.0)}, 0.0};
    EXPECT_THROW(tb_dirac_points(h), ConfigError);
}

TEST(DiracPoints, ZeroOfStructureFactor) {
    std::mt19937 rng(21);
    int found = 0;
    for (int i = 0; i < 300; ++i) {
        const HoppingSet h = oracle::random_hops(rng);
        const auto d = tb_dirac_points(h);
        EXPECT_EQ(d.has_value(), hopping_triangle_ok(h));
        if (!d) continue;
        ++found;
        for (const Vec2& k : {d->k, d->kp})
            EXPECT_LE(std::abs(structure_factor(k, h, nominal().c)), 1e-10 * h.max_magnitude());
    }
    EXPECT_GT(found, 50);
}

TEST(DiracPoints, OppositePairForRealHoppings) {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> mag(0.2, 2.0);
    for (int i = 0; i < 100; ++i) {
        const cplx common = std::polar(1.0, 0.37 * i);
        HoppingSet h{{mag(rng) * common, -mag(rng) * common, mag(rng) * common}, 0.0};
        const auto d = tb_dirac_points(h);
        if (!d) continue;
        EXPECT_LE(nominal().zone_distance(d->kp, -d->k), 1e-9);
    }
}

TEST(DiracPoints, CommonPhaseInvariance) {
    const HoppingSet h{{cplx(1.3), cplx(0.8), cplx(1.1)}, 0.0};
    const auto d0 = tb_dirac_points(h);
    ASSERT_TRUE(d0);
    HoppingSet r = h;
    for (auto& t : r.t) t *= std::polar(1.0, 0.9);
    const auto d1 = tb_dirac_points(r);
    ASSERT_TRUE(d1);
    EXPECT_TRUE(same_point_set({d0->k, d0->kp}, {d1->k, d1->kp}, 1e-12));
    for (double kx : {0.1, 0.5}) EXPECT_NEAR(tb_bands(Vec2(kx, 0.3), h, nominal().c).second,
                                             tb_bands(Vec2(kx, 0.3), r, nominal().c).second, 1e-14);
}

TEST(DiracPoints, SingleHoppingPhaseShiftsCosineArgument) {
    const double chi = 0.4;
    const auto d0 = tb_dirac_points(HoppingSet::balanced());
    HoppingSet h = HoppingSet::balanced();
    h.t[1] *= std::polar(1.0, chi);
    const auto d1 = tb_dirac_points(h);
    ASSERT_TRUE(d0 && d1);
    const auto& c = nominal().c;
    // With t1 the reference, X_2 = k.(c2 - c1) + chi is unchanged, so k.(c2 - c1)
    // drops by chi while k.(c3 - c1) stays put, for one of the pairings.
    auto wrapped = [](double x) { return std::remainder(x, 2 * pi); };
    int matched = 0;
    for (const Vec2& p : {d0->k, d0->kp})
        for (const Vec2& q : {d1->k, d1->kp}) {
            const Vec2 dk = q - p;
            if (std::abs(wrapped(dk.dot(c[1] - c[0]) + chi)) < 1e-9 && std::abs(wrapped(dk.dot(c[2] - c[0]))) < 1e-9)
                ++matched;
        }
    EXPECT_EQ(matched, 2);
}

TEST(DiracPoints, DegenerateHoppingRejected) {
    HoppingSet h{{cplx(0.0), cplx(1.0), cplx(1.0)}, 0.0};
    EXPECT_THROW(tb_dirac_points(h), DegenerateHopping);
}

TEST(DiracPoints, AgreeWithBruteForceOnRandomSets) {
    std::mt19937 rng(2024);
    for (int i = 0; i < 200; ++i) {
        const HoppingSet h = oracle::random_hops(rng);
        const auto d = tb_dirac_points(h);
        const auto zeros = oracle::brute_force_zeros(h, nominal());
        ASSERT_EQ(d.has_value(), !zeros.empty()) << "set " << i;
        if (!d) continue;
        std::vector<Vec2> mine{d->k};
        if (!d->merged) mine.push_back(d->kp);
        EXPECT_TRUE(same_point_set(mine, zeros, 1e-6 * nominal().kappa)) << "set " << i;
    }
}

TEST(TbScales, Balanced) {
    const auto s = tb_scales(cplx(1.0), 1.0);
    EXPECT_DOUBLE_EQ(s.bandwidth, 6.0);
    EXPECT_DOUBLE_EQ(s.fermi_energy, 3.0);
    EXPECT_DOUBLE_EQ(s.mass, 0.0);
    EXPECT_DOUBLE_EQ(s.fermi_velocity, 1.5);
}

TEST(TbScales, MassVanishesWithoutImbalance) {
    for (cplx t : {cplx(0.3), cplx(0.0, 2.0), std::polar(5.0, 1.0)}) EXPECT_EQ(tb_scales(t, nominal().a).mass, 0.0);
    const auto s = tb_scales(cplx(1.0), 2.0, 0.9);
    EXPECT_NEAR(s.mass, 0.9 / (3.0 * 3.0), 1e-15);
}

TEST(TbScales, LinearInHopping) {
    const auto s1 = tb_scales(cplx(0.7), nominal().a);
    const auto s2 = tb_scales(cplx(1.4), nominal().a);
    EXPECT_NEAR(s2.fermi_velocity, 2 * s1.fermi_velocity, 1e-15);
    EXPECT_NEAR(s2.bandwidth, 2 * s1.bandwidth, 1e-15);
}

TEST(TbScales, ZeroHoppingRejected) { EXPECT_THROW(tb_scales(cplx(0.0), 1.0), ConfigError); }

TEST(Dos, NormalizedPerBand) {
    const auto d = tb_dos(HoppingSet::balanced(), 400, 200);
    double lo = 0, hi = 0;
    for (std::size_t i = 0; i < d.energy.size(); ++i) {
        lo += d.lower[i] * d.bin_width;
        hi += d.upper[i] * d.bin_width;
    }
    EXPECT_NEAR(lo, 1.0, 1e-3);
    EXPECT_NEAR(hi, 1.0, 1e-3);
}

TEST(Dos, LinearNearDiracEnergy) {
    const auto d = tb_dos(HoppingSet::balanced(), 2000, 400);
    std::vector<double> x, y;
    for (std::size_t i = 0; i < d.energy.size(); ++i)
        if (std::abs(d.energy[i]) < 0.2) {
            x.push_back(std::abs(d.energy[i]));
            y.push_back(d.total(i));
        }
    const double slope = oracle::slope_through_origin(x, y);
    const double expected = 2.0 / (std::sqrt(3.0) * pi);
    EXPECT_NEAR(slope, expected, 0.05 * expected);
}

TEST(Dos, VanishesAtDiracEnergy) {
    const auto d = tb_dos(HoppingSet::balanced(), 1000, 200);
    // even bin count: zero is a bin edge, the two adjacent bins are the smallest near zero
    const std::size_t mid = d.energy.size() / 2;
    EXPECT_LE(d.total(mid), 2.0 / (std::sqrt(3.0) * pi) * d.bin_width * 1.5);
    EXPECT_LE(d.total(mid - 1), 2.0 / (std::sqrt(3.0) * pi) * d.bin_width * 1.5);
}

TEST(Dos, VanHovePeakAtUnitEnergy) {
    const auto d = tb_dos(HoppingSet::balanced(), 1000, 200);
    std::size_t best = 0;
    for (std::size_t i = 0; i < d.energy.size(); ++i)
        if (d.total(i) > d.total(best)) best = i;
    EXPECT_NEAR(std::abs(d.energy[best]), 1.0, 1.5 * d.bin_width);
}

TEST(Dos, Preconditions) {
    EXPECT_THROW(tb_dos(HoppingSet::balanced(), 50, 100), ConfigError);
    EXPECT_THROW(tb_dos(HoppingSet::balanced(), 200, 20), ConfigError);
}
