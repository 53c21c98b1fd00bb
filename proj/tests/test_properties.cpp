#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "honeycomb/geometry.hpp"
#include "honeycomb/kpath.hpp"
#include "honeycomb/planewave.hpp"
#include "honeycomb/potential.hpp"
#include "honeycomb/tightbinding.hpp"
#include "oracles.hpp"

using namespace honeycomb;

// Randomized invariants across modules. Each test draws from a fixed seed.

namespace {

constexpr double pi = std::numbers::pi;

BeamConfig random_config(std::mt19937& rng, bool symmetric = false) {
    std::uniform_real_distribution<double> s(0.7, 1.4), th(-0.25, 0.25), ph(-0.5, 0.5);
    BeamConfig c;
    c.strengths = {s(rng), s(rng), s(rng)};
    c.theta2 = th(rng);
    c.theta3 = th(rng);
    c.phase = ph(rng);
    if (symmetric) {
        c.strengths[2] = c.strengths[1];
        c.theta3 = -c.theta2;
        c.phase = 0.0;
    }
    return c;
}

}  // namespace

TEST(Property, Duality) {
    std::mt19937 rng(101);
    for (int i = 0; i < 500; ++i) {
        const auto g = build_geometry(random_config(rng));
        EXPECT_NEAR(g.a1.dot(g.b1), 2 * pi, 1e-12);
        EXPECT_NEAR(g.a2.dot(g.b2), 2 * pi, 1e-12);
        EXPECT_NEAR(g.a1.dot(g.b2), 0.0, 1e-12);
        EXPECT_NEAR(g.a2.dot(g.b1), 0.0, 1e-12);
    }
}

TEST(Property, Periodicity) {
    std::mt19937 rng(102);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    std::uniform_int_distribution<int> m(-3, 3);
    for (int i = 0; i < 100; ++i) {
        const BeamConfig cfg = random_config(rng);
        const Potential pot(cfg);
        const auto g = build_geometry(cfg);
        for (int j = 0; j < 10; ++j) {
            const Vec2 r(u(rng), u(rng));
            EXPECT_NEAR(pot.value(r + g.bravais(m(rng), m(rng))), pot.value(r), 1e-12);
        }
    }
}

TEST(Property, OxReflection) {
    std::mt19937 rng(103);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int i = 0; i < 100; ++i) {
        const Potential pot(random_config(rng, true));
        for (int j = 0; j < 10; ++j) {
            const Vec2 r(u(rng), u(rng));
            EXPECT_NEAR(pot.value(Vec2(r.x(), -r.y())), pot.value(r), 1e-12);
        }
    }
}

TEST(Property, IntensityIsFieldModulusSquared) {
    std::mt19937 rng(104);
    std::uniform_real_distribution<double> u(-8.0, 8.0);
    for (int i = 0; i < 1000; ++i) {
        BeamConfig cfg = random_config(rng);
        cfg.phase = 0.0;
        const Vec2 r(u(rng), u(rng));
        EXPECT_NEAR(potential_value(r, cfg), std::norm(field_amplitude(r, cfg)), 1e-12);
    }
}

TEST(Property, PhaseThirdPiInvertsLandscape) {
    BeamConfig flat, third;
    third.phase = pi / 3;
    const auto g = build_geometry(flat);
    // b1.D = b2.D = 2pi/3 turns each cos(b.r + pi/3) into -cos(b.r)
    const Eigen::Matrix2d B = (Eigen::Matrix2d() << g.b1.x(), g.b1.y(), g.b2.x(), g.b2.y()).finished();
    const Vec2 shift = B.inverse() * Vec2(2 * pi / 3, 2 * pi / 3);
    // extremes of the phase landscape from a grid scan of one cell
    double lo = 1e9, hi = -1e9;
    for (int i = 0; i < 400; ++i)
        for (int j = 0; j < 400; ++j) {
            const double v = potential_value(g.bravais(i / 400.0, j / 400.0), third);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    EXPECT_NEAR(hi - lo, 9.0, 1e-3);
    std::mt19937 rng(105);
    std::uniform_real_distribution<double> u(-6.0, 6.0);
    for (int i = 0; i < 500; ++i) {
        const Vec2 r(u(rng), u(rng));
        const double v0 = potential_value(r, flat);
        const double v3 = potential_value(r + shift, third);
        EXPECT_NEAR(v3 + v0, 6.0, 1e-12);
        EXPECT_NEAR((v3 - lo) / (hi - lo), 1.0 - v0 / 9.0, 2e-4);
    }
}

TEST(Property, BlochMatrixHermitian) {
    std::mt19937 rng(106);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 40; ++i) {
        const BeamConfig cfg = random_config(rng);
        const auto m = bloch_matrix(Vec2(u(rng), u(rng)), cfg, 4);
        EXPECT_LE((m - m.adjoint()).cwiseAbs().maxCoeff(), 1e-14);
    }
}

TEST(Property, ParticleHoleSymmetry) {
    std::mt19937 rng(107);
    std::uniform_real_distribution<double> u(-3.0, 3.0), e(-1.0, 1.0);
    const auto g = build_geometry(BeamConfig{});
    for (int i = 0; i < 500; ++i) {
        HoppingSet h = oracle::random_hops(rng);
        h.epsilon = e(rng);
        const Vec2 k(u(rng), u(rng));
        const auto [lo, hi] = tb_bands(k, h, g.c);
        const cplx z = oracle::z_of(k, h, g);
        Eigen::Matrix2cd H;
        H << h.epsilon, z, std::conj(z), -h.epsilon;
        const Eigen::Vector2d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd>(H).eigenvalues();
        EXPECT_NEAR(lo, ev(0), 1e-12);
        EXPECT_NEAR(hi, ev(1), 1e-12);
        EXPECT_NEAR(ev(0), -ev(1), 1e-12);
    }
}

TEST(Property, DosMirrorSymmetric) {
    std::mt19937 rng(108);
    HoppingSet h = oracle::random_hops(rng);
    h.epsilon = 0.3;
    const auto d = tb_dos(h, 300, 120);
    const std::size_t n = d.energy.size();
    for (std::size_t b = 0; b < n; ++b) EXPECT_DOUBLE_EQ(d.lower[b], d.upper[n - 1 - b]);
}

TEST(Property, FreeParticleLimit) {
    std::mt19937 rng(109);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 10; ++i) {
        const BeamConfig cfg = random_config(rng);
        FourierPotential mean_only;
        mean_only.coefficients[{0, 0}] = fourier_coefficients(cfg)(0, 0);
        const BlochHamiltonian ham(cfg, mean_only, 5);
        const auto& g = ham.geometry();
        const Vec2 k(u(rng), u(rng));
        std::vector<double> folded;
        for (int n1 = -5; n1 <= 5; ++n1)
            for (int n2 = -5; n2 <= 5; ++n2)
                folded.push_back((k + g.reciprocal(n1, n2)).squaredNorm() + mean_only(0, 0).real() * cfg.depth);
        std::sort(folded.begin(), folded.end());
        const auto e = ham.lowest(k, 6);
        for (int b = 0; b < 6; ++b) EXPECT_NEAR(e[b], folded[b], 1e-10 * std::max(1.0, folded[b]));
    }
}

TEST(Property, DeterministicUnderParallelism) {
    std::mt19937 rng(110);
    const BeamConfig cfg = random_config(rng);
    const auto path = k_path("G-K-M-G", build_geometry(cfg), 6);
    const auto a = solve_bands(cfg, path.k, 4, 6, path.s, 1);
    const auto b = solve_bands(cfg, path.k, 4, 6, path.s, 4);
    EXPECT_EQ(a.energy, b.energy);
    EXPECT_EQ(a.residual, b.residual);

    const HoppingSet h = oracle::random_hops(rng);
    const auto geo = build_geometry(BeamConfig{});
    const auto d1 = tb_dos(h, 400, 100, geo, 1);
    const auto d4 = tb_dos(h, 400, 100, geo, 4);
    EXPECT_EQ(d1.lower, d4.lower);
    EXPECT_EQ(d1.upper, d4.upper);
}
