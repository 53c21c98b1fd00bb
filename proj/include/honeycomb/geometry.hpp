#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "honeycomb/errors.hpp"

/// Lattice geometry of the three-beam optical lattice.
///
/// Canonical units throughout the library: lengths in 1/k_L, wave vectors in
/// k_L, energies in the recoil energy E_R = hbar^2 k_L^2 / (2m).
namespace honeycomb {

using Vec2 = Eigen::Vector2d;

enum class Detuning { blue, red };

inline std::string to_string(Detuning d) { return d == Detuning::blue ? "blue" : "red"; }

/// Every experimental knob of the lattice.
struct BeamConfig {
    std::array<double, 3> strengths{1.0, 1.0, 1.0};  ///< field strengths s_n in units of E_0
    double theta2 = 0.0;                              ///< rotation of beam 2 (rad, counterclockwise)
    double theta3 = 0.0;                              ///< rotation of beam 3 (rad, counterclockwise)
    double phase = 0.0;                               ///< phase of the incoherent standing-wave variant
    double depth = 32.0;                              ///< V_0 / E_R
    Detuning detuning = Detuning::blue;

    /// Effective Planck constant sqrt(2 E_R / V_0); derived, never stored.
    double hbar_e() const { return std::sqrt(2.0 / depth); }

    void validate() const {
        for (double s : strengths)
            if (!(s > 0.0) || !std::isfinite(s)) throw ConfigError("beam strengths must be positive and finite");
        if (!(depth > 0.0) || !std::isfinite(depth)) throw ConfigError("lattice depth V0/E_R must be positive");
        if (!std::isfinite(theta2) || !std::isfinite(theta3) || !std::isfinite(phase))
            throw ConfigError("beam angles and phase must be finite");
    }

    bool balanced_strengths() const { return strengths[0] == 1.0 && strengths[1] == 1.0 && strengths[2] == 1.0; }
    bool undistorted() const { return balanced_strengths() && theta2 == 0.0 && theta3 == 0.0 && phase == 0.0; }
};

/// Balanced, undistorted lattice at the depth corresponding to hbar_e.
inline BeamConfig nominal_config_for_hbar(double hbar_e) {
    BeamConfig cfg;
    cfg.depth = 2.0 / (hbar_e * hbar_e);
    return cfg;
}

struct LatticeVectors {
    std::array<Vec2, 3> k;  ///< beam wave vectors
    Vec2 b1, b2;            ///< reciprocal primitive vectors
    Vec2 a1, a2;            ///< Bravais primitive vectors
    std::array<Vec2, 3> c;  ///< A -> B displacement trine
    Vec2 K, Kp;             ///< Brillouin-zone corners K = (b2 - b1)/3 and K' = -K
    double Lambda = 0.0;    ///< |a1|
    double a = 0.0;         ///< |c1|, nearest-neighbour distance
    double kappa = 0.0;     ///< |b1|

    /// Third reciprocal vector closing the trine b1 + b2 + b3 = 0.
    Vec2 b3() const { return -b1 - b2; }

    Vec2 reciprocal(double n1, double n2) const { return n1 * b1 + n2 * b2; }
    Vec2 bravais(double m1, double m2) const { return m1 * a1 + m2 * a2; }

    /// Fractional coordinates of r with respect to (a1, a2).
    Eigen::Vector2d fractional(const Vec2& r) const {
        return {r.dot(b1) / (2.0 * std::numbers::pi), r.dot(b2) / (2.0 * std::numbers::pi)};
    }

    /// Fractional coordinates of k with respect to (b1, b2).
    Eigen::Vector2d reciprocal_fractional(const Vec2& kv) const {
        return {kv.dot(a1) / (2.0 * std::numbers::pi), kv.dot(a2) / (2.0 * std::numbers::pi)};
    }

    /// Translate r into the primitive cell spanned by a1, a2 (fractional coords in [0, 1)).
    Vec2 reduce_to_cell(const Vec2& r) const {
        Eigen::Vector2d f = fractional(r);
        return bravais(f.x() - std::floor(f.x()), f.y() - std::floor(f.y()));
    }

    /// Distance between two points modulo Bravais translations.
    double cell_distance(const Vec2& r, const Vec2& s) const {
        Eigen::Vector2d f = fractional(r - s);
        f.x() -= std::round(f.x());
        f.y() -= std::round(f.y());
        double best = 1e300;
        for (int i = -1; i <= 1; ++i)
            for (int j = -1; j <= 1; ++j) best = std::min(best, bravais(f.x() + i, f.y() + j).norm());
        return best;
    }

    /// Translate k by a reciprocal vector to the closest image of the origin
    /// (first Brillouin zone; boundary ties resolved arbitrarily).
    Vec2 reduce_to_zone(const Vec2& kv) const {
        Eigen::Vector2d f = reciprocal_fractional(kv);
        Vec2 base = kv - reciprocal(std::round(f.x()), std::round(f.y()));
        Vec2 best = base;
        for (int i = -1; i <= 1; ++i)
            for (int j = -1; j <= 1; ++j) {
                Vec2 cand = base - reciprocal(i, j);
                if (cand.squaredNorm() < best.squaredNorm() - 1e-14) best = cand;
            }
        return best;
    }

    /// Distance between two wave vectors modulo reciprocal translations.
    double zone_distance(const Vec2& p, const Vec2& q) const { return reduce_to_zone(p - q).norm(); }
};

namespace detail {
inline Vec2 rotate(const Vec2& v, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
}
}  // namespace detail

/// Beam, reciprocal, Bravais and displacement vectors for a configuration.
///
/// Beam n is rotated counterclockwise by theta_n about the origin; with
/// theta3 = -theta2 = theta this reproduces the small-angle result
/// b1' = b1 + (theta/sqrt3) b2, b2' = b2 + (theta/sqrt3) b1. Bravais vectors are
/// obtained by exact inversion of a_i . b_j = 2 pi delta_ij.
inline LatticeVectors build_geometry(const BeamConfig& cfg) {
    cfg.validate();
    const double r3 = std::sqrt(3.0);
    LatticeVectors g;
    g.k[0] = Vec2(0.0, 1.0);
    g.k[1] = detail::rotate(Vec2(-r3 / 2.0, -0.5), cfg.theta2);
    g.k[2] = detail::rotate(Vec2(r3 / 2.0, -0.5), cfg.theta3);

    g.b1 = g.k[2] - g.k[0];
    g.b2 = g.k[0] - g.k[1];

    const double cross = g.b1.x() * g.b2.y() - g.b1.y() * g.b2.x();
    if (std::abs(cross) < 1e-6) throw DegenerateCell("rotated beams are collinear: reciprocal cell degenerate");

    // Rows of B are b1, b2; the columns of A = 2 pi B^{-1} are a1, a2.
    Eigen::Matrix2d B;
    B << g.b1.x(), g.b1.y(), g.b2.x(), g.b2.y();
    const Eigen::Matrix2d A = 2.0 * std::numbers::pi * B.inverse();
    g.a1 = A.col(0);
    g.a2 = A.col(1);

    g.c[0] = (g.a1 + g.a2) / 3.0;
    g.c[1] = (g.a2 - 2.0 * g.a1) / 3.0;
    g.c[2] = (g.a1 - 2.0 * g.a2) / 3.0;

    g.K = (g.b2 - g.b1) / 3.0;
    g.Kp = -g.K;
    g.Lambda = g.a1.norm();
    g.a = g.c[0].norm();
    g.kappa = g.b1.norm();
    return g;
}

struct DipoleDepth {
    double depth;              ///< V_0 in the energy unit of hbar*Gamma
    bool triangular_regime;    ///< red detuning: one minimum per cell, outside the honeycomb analysis
};

/// V_0 = (hbar Gamma / 8)(Gamma / delta)(I_0 / I_s), returned in units of hbar*Gamma.
/// The detuning must carry the same frequency unit as the linewidth.
inline DipoleDepth dipole_depth(double linewidth, double detuning, double intensity_ratio) {
    if (detuning == 0.0 || !std::isfinite(detuning)) throw ConfigError("dipole depth needs a nonzero detuning");
    if (!(linewidth > 0.0)) throw ConfigError("linewidth must be positive");
    if (!(intensity_ratio >= 0.0)) throw ConfigError("intensity ratio must be non-negative");
    const double v0 = (1.0 / 8.0) * (linewidth / detuning) * intensity_ratio;
    return {v0, detuning < 0.0};
}

}  // namespace honeycomb
