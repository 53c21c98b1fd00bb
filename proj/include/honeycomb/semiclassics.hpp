#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "honeycomb/errors.hpp"
#include "honeycomb/geometry.hpp"
#include "honeycomb/potential.hpp"

/// Harmonic and instanton estimates of the nearest-neighbour hopping |t0|.
///
/// Rescaled units: lengths 1/k_L, energies V_0, time sqrt(m / (k_L^2 V_0)).
/// In these units the zero-energy instanton runs along y = 0 from site A
/// (x = a) to site B (x = 2a) and the well frequency is omega_0 = 3/sqrt(2).
namespace honeycomb {

inline constexpr double kOmega0 = 2.1213203435596424;  // 3 / sqrt(2)

/// Honeycomb nearest-neighbour distance a = 4 pi / (3 sqrt3) for k_L = 1.
inline double nominal_bond_length() { return 4.0 * std::numbers::pi / (3.0 * std::sqrt(3.0)); }

/// Position along the A->B line in units of a: tan(pi x0/3) = -sqrt3 coth(3 sqrt2 tau / 4).
inline double instanton_trajectory(double tau) {
    const double u = 3.0 * std::sqrt(2.0) * tau / 4.0;
    return (3.0 / std::numbers::pi) * (std::numbers::pi / 2.0 + std::atan(std::tanh(u) / std::sqrt(3.0)));
}

/// d x0 / d tau, from differentiating the closed form.
inline double instanton_velocity(double tau) {
    const double u = 3.0 * std::sqrt(2.0) * tau / 4.0;
    const double th = std::tanh(u);
    const double sech2 = 1.0 - th * th;
    return (3.0 / std::numbers::pi) * (1.0 / std::sqrt(3.0)) * sech2 / (1.0 + th * th / 3.0) * (3.0 * std::sqrt(2.0) / 4.0);
}

/// S0 = int_a^{2a} sqrt(2 v(x, 0)) dx = 4 sqrt2 (1 - pi / (3 sqrt3)).
inline double instanton_action() {
    return 4.0 * std::sqrt(2.0) * (1.0 - std::numbers::pi / (3.0 * std::sqrt(3.0)));
}

struct FluctuationPrefactor {
    double alpha1;
    double alpha2;
    double alpha;
    double horizon;   ///< T of the last evaluation
    double drift;     ///< |alpha2(T_last) - alpha2(T_prev)| relative
};

struct JacobiFields {
    double j;   ///< J(T) with the transverse curvature along the instanton
    double j0;  ///< J_0(T) with the harmonic curvature omega_0^2
};

/// Integrate J'' = omega_y^2(tau) J and J0'' = omega_0^2 J0 on [-T, T] with
/// J(-T) = J0(-T) = 0, J'(-T) = J0'(-T) = 1, fixed-step RK4 of step `dt`.
///
/// omega_y^2(tau) is d^2 v / dy^2 at (a x0(tau), 0) from the analytic Hessian.
inline JacobiFields integrate_jacobi_fields(double horizon, double dt) {
    namespace ode = boost::numeric::odeint;
    using State = std::array<double, 4>;  // J, J', J0, J0'

    const Potential pot(BeamConfig{});
    const double a = nominal_bond_length();
    const double w0sq = kOmega0 * kOmega0;
    auto rhs = [&](const State& s, State& ds, double tau) {
        const double wy2 = pot.hessian(Vec2(a * instanton_trajectory(tau), 0.0))(1, 1);
        ds[0] = s[1];
        ds[1] = wy2 * s[0];
        ds[2] = s[3];
        ds[3] = w0sq * s[2];
    };
    State s{0.0, 1.0, 0.0, 1.0};
    const int steps = static_cast<int>(std::ceil(2.0 * horizon / dt));
    const double h = 2.0 * horizon / steps;
    ode::runge_kutta4<State> stepper;
    ode::integrate_n_steps(stepper, rhs, s, -horizon, h, steps);
    return {s[0], s[2]};
}

/// alpha2 at a finite horizon T.
inline double alpha2_at(double horizon, double dt) {
    const JacobiFields f = integrate_jacobi_fields(horizon, dt);
    return std::sqrt(f.j0 / f.j);
}

/// alpha1 = sqrt(27 sqrt2 / pi) in closed form; alpha2 = lim sqrt(J0(T)/J(T)).
///
/// The horizon starts at T = 12/omega_0 and grows by 2/omega_0 until two
/// successive alpha2 differ by less than 1e-4 relative; the last three values
/// are Aitken-extrapolated.
inline FluctuationPrefactor fluctuation_prefactor(double dt = 1e-3, int max_rounds = 12) {
    const double alpha1 = std::sqrt(27.0 * std::sqrt(2.0) / std::numbers::pi);
    std::vector<double> seq;
    double horizon = 12.0 / kOmega0;
    double drift = 1.0;
    for (int round = 0; round < max_rounds; ++round, horizon += 2.0 / kOmega0) {
        seq.push_back(alpha2_at(horizon, dt));
        if (seq.size() >= 2) {
            drift = std::abs(seq.back() - seq[seq.size() - 2]) / std::abs(seq.back());
            if (drift < 1e-4 && seq.size() >= 3) break;
        }
    }
    if (drift >= 1e-4) throw ConvergenceFailure("alpha2 horizon limit did not converge", drift);

    double alpha2 = seq.back();
    const std::size_t n = seq.size();
    const double d1 = seq[n - 1] - seq[n - 2], d2 = seq[n - 2] - seq[n - 3];
    if (std::abs(d2 - d1) > 1e-300 && std::abs(d1) < std::abs(d2)) alpha2 = seq[n - 1] - d1 * d1 / (d1 - d2);
    return {alpha1, alpha2, alpha1 * alpha2, horizon, drift};
}

struct InstantonResult {
    double action;  ///< S0
    double alpha1, alpha2, alpha;

    /// |t0| / V0 = alpha sqrt(hbar_e) exp(-S0 / hbar_e).
    double t0_over_v0(double hbar_e) const { return alpha * std::sqrt(hbar_e) * std::exp(-action / hbar_e); }

    /// |t0| / E_R at depth V0/E_R.
    double t0_over_er(double depth) const { return t0_over_v0(std::sqrt(2.0 / depth)) * depth; }

    /// Prefactor of (V0/E_R)^{3/4} in |t0|/E_R: alpha 2^{1/4}.
    double printed_prefactor() const { return alpha * std::pow(2.0, 0.25); }
    /// Coefficient of sqrt(V0/E_R) in the exponent: S0 / sqrt2.
    double printed_exponent() const { return action / std::sqrt(2.0); }
};

inline const InstantonResult& instanton() {
    static const InstantonResult cached = [] {
        const FluctuationPrefactor f = fluctuation_prefactor();
        return InstantonResult{instanton_action(), f.alpha1, f.alpha2, f.alpha};
    }();
    return cached;
}

/// Validity guard for the tight-binding estimates.
inline void require_tight_binding_depth(double depth) {
    if (!(depth >= 5.0)) throw ConfigError("semiclassical estimate requires V0/E_R >= 5");
}

/// True where the estimate is formally valid but marginal (V0 < 10 E_R).
inline bool tight_binding_marginal(double depth) { return depth < 10.0; }

/// |t0| / E_R from the instanton: alpha sqrt(hbar_e) exp(-S0/hbar_e) V0/E_R.
inline double t0_semiclassical(double depth) {
    require_tight_binding_depth(depth);
    return instanton().t0_over_er(depth);
}

/// The same estimate with the rounded constants 1.861 and 1.582.
inline double t0_printed_formula(double depth) {
    return 1.861 * std::pow(depth, 0.75) * std::exp(-1.582 * std::sqrt(depth));
}

struct HarmonicResult {
    double hbar_omega0;  ///< 3 sqrt(V0 E_R), units of E_R
    double overlap;      ///< <w_A|w_B> = exp(-(2 pi^2/9) sqrt(V0/E_R))
    double t0;           ///< -(pi^2/3 - 1) V0 overlap, units of E_R
    double ell;          ///< oscillator length sqrt(hbar/(m omega0)), units of 1/k_L
};

inline HarmonicResult t0_harmonic(double depth) {
    if (!(depth > 0.0)) throw ConfigError("V0/E_R must be positive");
    const double pi2 = std::numbers::pi * std::numbers::pi;
    HarmonicResult r;
    r.hbar_omega0 = 3.0 * std::sqrt(depth);
    r.overlap = std::exp(-(2.0 * pi2 / 9.0) * std::sqrt(depth));
    r.t0 = -(pi2 / 3.0 - 1.0) * depth * r.overlap;
    r.ell = std::sqrt(2.0 / r.hbar_omega0);
    return r;
}

struct ExperimentalBounds {
    double t0;                  ///< semiclassical |t0| / E_R
    double bandwidth;           ///< W / E_R
    double fermi_energy;        ///< E_F / E_R
    double temperature_ratio;   ///< T_max / T_R = W / E_R
    std::optional<double> zeta;         ///< trap length sqrt(2|t0| / (m Omega^2)), units 1/k_L
    std::optional<double> filling;      ///< N_F (a / zeta)^2
    bool marginal_depth;
};

/// Feasibility numbers for a depth, optionally in a harmonic trap.
///
/// `trap_frequency` is the angular trap frequency in units of E_R / hbar. The
/// trap length uses Omega^2 so that it is a length; with m = 1/2 in recoil
/// units this is sqrt(4 |t0|) / Omega.
inline ExperimentalBounds experimental_bounds(double depth, std::optional<double> trap_frequency = std::nullopt,
                                              std::optional<double> atom_count = std::nullopt) {
    require_tight_binding_depth(depth);
    ExperimentalBounds b;
    b.t0 = t0_semiclassical(depth);
    b.bandwidth = 6.0 * b.t0;
    b.fermi_energy = 3.0 * b.t0;
    b.temperature_ratio = b.bandwidth;
    b.marginal_depth = tight_binding_marginal(depth);
    if (trap_frequency) {
        if (!(*trap_frequency > 0.0)) throw ConfigError("trap frequency must be positive");
        const double mass = 0.5;
        b.zeta = std::sqrt(2.0 * b.t0 / (mass * *trap_frequency * *trap_frequency));
        if (atom_count) {
            const double ratio = nominal_bond_length() / *b.zeta;
            b.filling = *atom_count * ratio * ratio;
        }
    }
    return b;
}

}  // namespace honeycomb
