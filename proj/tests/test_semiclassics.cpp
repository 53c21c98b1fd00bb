#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "honeycomb/potential.hpp"
#include "honeycomb/semiclassics.hpp"
#include "oracles.hpp"

using namespace honeycomb;

namespace {

constexpr double pi = std::numbers::pi;

double v_on_axis(double x) { return potential_value(Vec2(x, 0.0), BeamConfig{}); }

}  // namespace

TEST(Instanton, TrajectoryLimits) {
    EXPECT_NEAR(instanton_trajectory(-40.0), 1.0, 1e-12);
    EXPECT_NEAR(instanton_trajectory(40.0), 2.0, 1e-12);
    EXPECT_NEAR(instanton_trajectory(0.0), 1.5, 1e-15);
}

TEST(Instanton, TrajectoryMatchesImplicitForm) {
    for (double tau : {-2.0, -0.5, 0.3, 1.7}) {
        const double x0 = instanton_trajectory(tau);
        const double coth = 1.0 / std::tanh(3.0 * std::sqrt(2.0) * tau / 4.0);
        EXPECT_NEAR(std::tan(pi * x0 / 3.0), -std::sqrt(3.0) * coth, 1e-10 * std::abs(coth));
    }
}

TEST(Instanton, TrajectoryMonotone) {
    double prev = instanton_trajectory(-10.0);
    for (double tau = -9.9; tau <= 10.0; tau += 0.1) {
        const double x = instanton_trajectory(tau);
        EXPECT_GT(x, prev);
        EXPECT_GT(x, 1.0);
        EXPECT_LT(x, 2.0);
        prev = x;
    }
}

TEST(Instanton, VelocityMatchesFiniteDifference) {
    const double h = 1e-5;
    for (double tau : {-1.5, 0.0, 0.8}) {
        const double fd = (instanton_trajectory(tau + h) - instanton_trajectory(tau - h)) / (2 * h);
        EXPECT_NEAR(instanton_velocity(tau), fd, 1e-9);
    }
}

TEST(Instanton, ZeroEnergyAlongPath) {
    const double a = nominal_bond_length();
    for (double tau = -3.0; tau <= 3.0; tau += 0.25) {
        const double xdot = a * instanton_velocity(tau);
        EXPECT_NEAR(0.5 * xdot * xdot - v_on_axis(a * instanton_trajectory(tau)), 0.0, 1e-8) << tau;
    }
}

TEST(Instanton, ActionClosedFormAgainstQuadrature) {
    const double a = nominal_bond_length();
    const double q = oracle::simpson([](double x) { return std::sqrt(2.0 * std::max(0.0, v_on_axis(x))); }, a, 2 * a,
                                     1000000);
    EXPECT_NEAR(instanton_action(), q, 1e-8);
    EXPECT_NEAR(instanton_action(), 2.2375, 0.001);
}

TEST(Instanton, FluctuationPrefactors) {
    const auto& r = instanton();
    EXPECT_NEAR(r.alpha1, std::sqrt(27.0 * std::sqrt(2.0) / pi), 1e-14);
    EXPECT_NEAR(r.alpha1, 3.486, 0.001);
    EXPECT_NEAR(r.alpha2, 0.449, 0.002);
    EXPECT_NEAR(r.alpha, 1.565, 0.01);
    EXPECT_NEAR(r.alpha, r.alpha1 * r.alpha2, 1e-15);
    EXPECT_GT(r.action, 0.0);
}

TEST(Instanton, StepHalvingStable) {
    const double T = 14.0 / kOmega0;
    EXPECT_LE(std::abs(alpha2_at(T, 1e-3) - alpha2_at(T, 5e-4)), 1e-4);
}

TEST(Instanton, HarmonicJacobiClosedForm) {
    for (double T : {2.0, 5.0}) {
        const auto f = integrate_jacobi_fields(T, 1e-3);
        const double exact = std::sinh(2 * kOmega0 * T) / kOmega0;
        EXPECT_NEAR(f.j0, exact, 1e-8 * exact);
    }
}

TEST(Instanton, HorizonNonConvergenceReported) {
    EXPECT_THROW(fluctuation_prefactor(1e-3, 1), ConvergenceFailure);
}

TEST(HoppingEstimate, Examples) {
    EXPECT_NEAR(t0_semiclassical(32.0), 3.25e-3, 0.01 * 3.25e-3);
    EXPECT_NEAR(t0_semiclassical(10.0), 7.0e-2, 0.01 * 7.0e-2);
}

TEST(HoppingEstimate, PrintedConstantsDerivable) {
    const auto& r = instanton();
    EXPECT_NEAR(r.printed_prefactor(), 1.861, 0.005 * 1.861);
    EXPECT_NEAR(r.printed_exponent(), 1.582, 0.005 * 1.582);
}

TEST(HoppingEstimate, MatchesPrintedFormAcrossRange) {
    const auto& r = instanton();
    for (double hbar = 0.1; hbar <= 0.4 + 1e-12; hbar += 0.02) {
        const double depth = 2.0 / (hbar * hbar);
        const double direct = r.alpha * std::sqrt(hbar) * std::exp(-r.action / hbar) * depth;
        EXPECT_NEAR(direct, t0_semiclassical(depth), 1e-13 * direct);
        // rounding 1.5816 -> 1.582 costs exp(-0.0004 sqrt(V0)); under 0.5% for V0 <= 139
        const double rounding = (1.861 / r.printed_prefactor()) *
                                std::exp(-(1.582 - r.printed_exponent()) * std::sqrt(depth));
        EXPECT_NEAR(t0_printed_formula(depth), direct * rounding, 1e-12 * direct);
        if (hbar >= 0.12 - 1e-12) EXPECT_NEAR(direct, t0_printed_formula(depth), 0.005 * direct) << hbar;
        else EXPECT_NEAR(direct, t0_printed_formula(depth), 0.006 * direct) << hbar;
    }
}

TEST(HoppingEstimate, DepthGuard) {
    EXPECT_THROW(t0_semiclassical(4.0), ConfigError);
    EXPECT_NO_THROW(t0_semiclassical(5.0));
    EXPECT_TRUE(tight_binding_marginal(8.0));
    EXPECT_FALSE(tight_binding_marginal(12.0));
}

TEST(Harmonic, Examples) {
    const auto h = t0_harmonic(32.0);
    EXPECT_LT(h.t0, 0.0);
    EXPECT_NEAR(std::abs(h.t0), 3.0e-4, 0.02 * 3.0e-4);
    EXPECT_NEAR(t0_semiclassical(32.0) / std::abs(h.t0), 10.0, 1.5);
    EXPECT_NEAR(t0_harmonic(9.0).hbar_omega0, 9.0, 1e-14);
    EXPECT_GT(h.overlap, 0.0);
    EXPECT_LT(h.overlap, 1.0);
    EXPECT_THROW(t0_harmonic(0.0), ConfigError);
}

TEST(Harmonic, UnderestimatesThroughout) {
    for (double hbar = 0.1; hbar <= 0.35 + 1e-12; hbar += 0.05) {
        const double depth = 2.0 / (hbar * hbar);
        EXPECT_LT(std::abs(t0_harmonic(depth).t0), t0_semiclassical(depth)) << hbar;
    }
}

TEST(Bounds, TemperatureRatio) {
    const auto deep = experimental_bounds(32.0);
    EXPECT_GE(deep.temperature_ratio, 1.0 / 60);
    EXPECT_LE(deep.temperature_ratio, 1.0 / 40);
    EXPECT_NEAR(deep.bandwidth, 6 * deep.t0, 1e-15);
    EXPECT_FALSE(deep.zeta.has_value());
    const auto shallow = experimental_bounds(10.0);
    EXPECT_GE(shallow.temperature_ratio, 1.0 / 3);
    EXPECT_LE(shallow.temperature_ratio, 1.0 / 2);
    EXPECT_TRUE(experimental_bounds(7.0).marginal_depth);
}

TEST(Bounds, FillingLinearInAtomCount) {
    const auto one = experimental_bounds(32.0, 0.01, 1e4);
    const auto two = experimental_bounds(32.0, 0.01, 2e4);
    ASSERT_TRUE(one.filling && two.filling);
    EXPECT_NEAR(*two.filling, 2 * *one.filling, 1e-12 * *one.filling);
    EXPECT_NEAR(*one.zeta, std::sqrt(4 * one.t0) / 0.01, 1e-12 * *one.zeta);
    EXPECT_THROW(experimental_bounds(3.0), ConfigError);
    EXPECT_THROW(experimental_bounds(32.0, -1.0), ConfigError);
}
