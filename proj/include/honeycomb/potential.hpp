#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "honeycomb/errors.hpp"
#include "honeycomb/geometry.hpp"

/// Dimensionless optical potential v(r) (units of V_0) and its critical points.
namespace honeycomb {

enum class CriticalKind { minimum, maximum, saddle, cubic_saddle };
enum class Sublattice { A, B, C, S, none };

inline std::string to_string(CriticalKind k) {
    switch (k) {
        case CriticalKind::minimum: return "minimum";
        case CriticalKind::maximum: return "maximum";
        case CriticalKind::saddle: return "saddle";
        case CriticalKind::cubic_saddle: return "cubic-saddle";
    }
    return "?";
}

inline std::string to_string(Sublattice s) {
    switch (s) {
        case Sublattice::A: return "A";
        case Sublattice::B: return "B";
        case Sublattice::C: return "C";
        case Sublattice::S: return "S";
        case Sublattice::none: return "none";
    }
    return "?";
}

struct CriticalPoint {
    Vec2 position;
    CriticalKind kind;
    double value;
    Sublattice tag = Sublattice::none;
};

/// One cosine term A cos(G.r + phase) of the potential.
struct PotentialTerm {
    double amplitude;
    Vec2 wavevector;
};

/// The potential v(r) = offset + sum_j A_j cos(G_j . r + phase).
///
/// With b3 = -b1 - b2 the three terms are (2 s1 s2, b1), (2 s1 s3, b2),
/// (2 s2 s3, b3). For phase = 0 this is |s1 + s2 e^{-i b1.r} + s3 e^{i b2.r}|^2;
/// for balanced strengths and phase != 0 it is the incoherent three-standing-wave
/// pattern 3 + 2 sum_a cos(b_a . r + phase).
class Potential {
public:
    explicit Potential(const BeamConfig& cfg) : cfg_(cfg), geo_(build_geometry(cfg)) {
        const auto& s = cfg.strengths;
        offset_ = s[0] * s[0] + s[1] * s[1] + s[2] * s[2];
        terms_[0] = {2.0 * s[0] * s[1], geo_.b1};
        terms_[1] = {2.0 * s[0] * s[2], geo_.b2};
        terms_[2] = {2.0 * s[1] * s[2], geo_.b3()};
    }

    const BeamConfig& config() const { return cfg_; }
    const LatticeVectors& geometry() const { return geo_; }
    const std::array<PotentialTerm, 3>& terms() const { return terms_; }
    double offset() const { return offset_; }

    double value(const Vec2& r) const {
        double v = offset_;
        for (const auto& t : terms_) v += t.amplitude * std::cos(t.wavevector.dot(r) + cfg_.phase);
        return v;
    }

    Vec2 gradient(const Vec2& r) const {
        Vec2 g = Vec2::Zero();
        for (const auto& t : terms_) g -= t.amplitude * std::sin(t.wavevector.dot(r) + cfg_.phase) * t.wavevector;
        return g;
    }

    Eigen::Matrix2d hessian(const Vec2& r) const {
        Eigen::Matrix2d h = Eigen::Matrix2d::Zero();
        for (const auto& t : terms_)
            h -= t.amplitude * std::cos(t.wavevector.dot(r) + cfg_.phase) * (t.wavevector * t.wavevector.transpose());
        return h;
    }

    /// Curvature scale 3 kappa^2 / 4 of the balanced wells, v ~ (3/4) kappa^2 r^2.
    double typical_curvature() const { return 0.75 * geo_.kappa * geo_.kappa; }

private:
    BeamConfig cfg_;
    LatticeVectors geo_;
    std::array<PotentialTerm, 3> terms_;
    double offset_ = 0.0;
};

/// f'(r) = s1 + s2 exp(-i b1'.r) + s3 exp(i b2'.r). Only defined for the coherent lattice.
inline std::complex<double> field_amplitude(const Vec2& r, const BeamConfig& cfg) {
    if (cfg.phase != 0.0)
        throw ConfigError("field amplitude undefined for the phase variant: it is an incoherent superposition");
    const LatticeVectors g = build_geometry(cfg);
    const auto& s = cfg.strengths;
    const std::complex<double> i(0.0, 1.0);
    return s[0] + s[1] * std::exp(-i * g.b1.dot(r)) + s[2] * std::exp(i * g.b2.dot(r));
}

inline double potential_value(const Vec2& r, const BeamConfig& cfg) { return Potential(cfg).value(r); }

namespace detail {

/// Newton iteration on grad v = 0 from `start`. Steps are capped at `max_step`;
/// returns the refined point and the final gradient norm.
inline std::pair<Vec2, double> newton_critical(const Potential& pot, Vec2 r, int max_iter, double max_step,
                                               double tol) {
    double gnorm = pot.gradient(r).norm();
    for (int it = 0; it < max_iter && gnorm > tol; ++it) {
        const Vec2 g = pot.gradient(r);
        const Eigen::Matrix2d h = pot.hessian(r);
        Vec2 step;
        if (std::abs(h.determinant()) > 1e-300) {
            step = -h.fullPivLu().solve(g);
        } else {
            step = -g / std::max(1.0, pot.typical_curvature());
        }
        if (step.norm() > max_step) step *= max_step / step.norm();
        const Vec2 trial = r + step;
        const double tn = pot.gradient(trial).norm();
        if (tn >= gnorm && step.norm() < 1e-15) break;
        r = trial;
        gnorm = tn;
    }
    return {r, gnorm};
}

/// Damped Newton descent toward a local minimum of v.
inline std::pair<Vec2, double> descend_to_minimum(const Potential& pot, Vec2 r, double tol) {
    for (int it = 0; it < 200; ++it) {
        const Vec2 g = pot.gradient(r);
        if (g.norm() <= tol) break;
        const Eigen::Matrix2d h = pot.hessian(r);
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(h);
        Vec2 step;
        if (es.eigenvalues().minCoeff() > 1e-8) {
            step = -h.ldlt().solve(g);
        } else {
            step = -g / std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
        }
        if (step.norm() > 0.1) step *= 0.1 / step.norm();
        // backtracking on v
        const double v0 = pot.value(r);
        double lambda = 1.0;
        while (lambda > 1e-6 && pot.value(r + lambda * step) > v0 + 1e-14) lambda *= 0.5;
        r += lambda * step;
    }
    return {r, pot.gradient(r).norm()};
}

inline CriticalKind kind_from_hessian(const Eigen::Matrix2d& h, double cubic_threshold) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(h);
    const double lo = es.eigenvalues()(0), hi = es.eigenvalues()(1);
    if (std::max(std::abs(lo), std::abs(hi)) <= cubic_threshold) return CriticalKind::cubic_saddle;
    if (lo > 0.0) return CriticalKind::minimum;
    if (hi < 0.0) return CriticalKind::maximum;
    return CriticalKind::saddle;
}

inline bool triangle_ok(double x, double y, double z) {
    return std::abs(y - z) <= x && x <= y + z;
}

/// Closed-form zeros of the coherent field amplitude, returned as the phases
/// (b1.r, b2.r) of sites A and B; nullopt when the strengths violate the triangle inequality.
inline std::optional<std::pair<Eigen::Vector2d, Eigen::Vector2d>> field_zero_phases(const std::array<double, 3>& s) {
    if (!triangle_ok(s[0], s[1], s[2])) return std::nullopt;
    const double c1 = std::clamp((s[2] * s[2] - s[1] * s[1] - s[0] * s[0]) / (2.0 * s[0] * s[1]), -1.0, 1.0);
    const double c2 = std::clamp((s[1] * s[1] - s[2] * s[2] - s[0] * s[0]) / (2.0 * s[0] * s[2]), -1.0, 1.0);
    const double u = std::acos(c1), w = std::acos(c2);
    // s2 sin u = s3 sin w selects equal signs; the A site carries (+,+).
    const double two_pi = 2.0 * std::numbers::pi;
    return std::make_pair(Eigen::Vector2d(u, w), Eigen::Vector2d(two_pi - u, two_pi - w));
}

}  // namespace detail

/// Cubic-saddle threshold: Hessian spectral norm below 1e-6 of the typical curvature.
inline double cubic_saddle_threshold(const Potential& pot) { return 1e-6 * pot.typical_curvature(); }

struct MinimaPair {
    CriticalPoint A;
    CriticalPoint B;
};

/// The two minima of the primitive cell.
///
/// For phase = 0 the minima are the zeros of the field amplitude and follow in
/// closed form from cos(b1'.r) = (s3^2 - s2^2 - s1^2)/(2 s1 s2) and
/// cos(b2'.r) = (s2^2 - s3^2 - s1^2)/(2 s1 s3); otherwise they are found by
/// descent from the phase = 0 positions. Either way the result is polished to
/// |grad v| <= 1e-10.
inline MinimaPair locate_minima(const BeamConfig& cfg) {
    const Potential pot(cfg);
    const LatticeVectors& g = pot.geometry();
    const auto phases = detail::field_zero_phases(cfg.strengths);
    if (!phases)
        throw TriangleInequalityViolated("beam strengths violate the triangle inequality: no two-minima structure");

    auto from_phases = [&](const Eigen::Vector2d& p) {
        return g.reduce_to_cell((p.x() * g.a1 + p.y() * g.a2) / (2.0 * std::numbers::pi));
    };
    std::array<Vec2, 2> seeds{from_phases(phases->first), from_phases(phases->second)};

    const double cubic = cubic_saddle_threshold(pot);
    std::array<CriticalPoint, 2> out;
    for (int i = 0; i < 2; ++i) {
        Vec2 r = seeds[i];
        if (cfg.phase != 0.0) r = detail::descend_to_minimum(pot, r, 1e-11).first;
        auto [refined, gnorm] = detail::newton_critical(pot, r, 50, 0.05, 1e-12);
        if (gnorm > 1e-10)
            throw TwoPointBasisLost("minimum refinement did not converge (|grad v| = " + std::to_string(gnorm) + ")");
        const CriticalKind kind = detail::kind_from_hessian(pot.hessian(refined), cubic);
        if (kind != CriticalKind::minimum)
            throw TwoPointBasisLost("site " + std::string(i == 0 ? "A" : "B") + " is no longer a minimum (" +
                                    to_string(kind) + ")");
        out[i] = {g.reduce_to_cell(refined), kind, pot.value(refined), i == 0 ? Sublattice::A : Sublattice::B};
    }
    if (g.cell_distance(out[0].position, out[1].position) < 1e-6)
        throw TwoPointBasisLost("the two minima coincide");
    return {out[0], out[1]};
}

struct Saddle {
    CriticalPoint point;
    int bond;          ///< 1, 2, 3: the A->B displacement c_n the saddle sits on
    double barrier;    ///< saddle value minus the deeper minimum
};

struct SaddleSet {
    std::vector<Saddle> saddles;
    bool merged = false;  ///< distinct seeds converged onto the same point
};

/// The three saddle points of the primitive cell with their barrier heights.
///
/// Seeds are the half-lattice points (a1+a2)/2, a2/2, a1/2, which sit between
/// A and B along c1, c2, c3 respectively; for phase = 0 they are exact critical
/// points by inversion symmetry.
inline SaddleSet locate_saddles(const BeamConfig& cfg) {
    const MinimaPair minima = locate_minima(cfg);
    const Potential pot(cfg);
    const LatticeVectors& g = pot.geometry();
    const double floor = std::min(minima.A.value, minima.B.value);
    const double cubic = cubic_saddle_threshold(pot);

    const std::array<Vec2, 3> seeds{(g.a1 + g.a2) / 2.0, g.a2 / 2.0, g.a1 / 2.0};
    SaddleSet out;
    for (int n = 0; n < 3; ++n) {
        auto [r, gnorm] = detail::newton_critical(pot, seeds[n], 200, 0.05, 1e-12);
        if (gnorm > 1e-8) throw NotCritical("saddle refinement did not converge on bond " + std::to_string(n + 1));
        const Vec2 cell = g.reduce_to_cell(r);
        const double v = pot.value(r);
        const CriticalKind kind = detail::kind_from_hessian(pot.hessian(r), cubic);
        for (const auto& other : out.saddles)
            if (g.cell_distance(other.point.position, cell) < 1e-6) out.merged = true;
        out.saddles.push_back({{cell, kind, v, Sublattice::S}, n + 1, v - floor});
    }
    return out;
}

/// Refine and classify a critical point near r.
///
/// Refinement is local: at most a few Newton steps with total displacement
/// below 1e-3 / k_L. Points that do not become critical raise NotCritical.
inline CriticalPoint classify_point(const Vec2& r, const BeamConfig& cfg) {
    const Potential pot(cfg);
    const LatticeVectors& g = pot.geometry();
    const Vec2 start = g.reduce_to_cell(r);
    auto [refined, gnorm] = detail::newton_critical(pot, start, 60, 1e-4, 1e-12);
    if ((refined - start).norm() > 1e-3 || gnorm > 1e-6)
        throw NotCritical("point is not a critical point of the potential (|grad v| = " + std::to_string(gnorm) + ")");

    CriticalPoint cp{g.reduce_to_cell(refined), detail::kind_from_hessian(pot.hessian(refined),
                                                                           cubic_saddle_threshold(pot)),
                     pot.value(refined), Sublattice::none};

    const double tol = 1e-6;
    if (g.cell_distance(cp.position, Vec2::Zero()) < tol) {
        cp.tag = Sublattice::C;
    } else if (auto phases = detail::field_zero_phases(cfg.strengths)) {
        const Vec2 ra = (phases->first.x() * g.a1 + phases->first.y() * g.a2) / (2.0 * std::numbers::pi);
        const Vec2 rb = (phases->second.x() * g.a1 + phases->second.y() * g.a2) / (2.0 * std::numbers::pi);
        if (g.cell_distance(cp.position, ra) < tol)
            cp.tag = Sublattice::A;
        else if (g.cell_distance(cp.position, rb) < tol)
            cp.tag = Sublattice::B;
    }
    if (cp.tag == Sublattice::none && cp.kind == CriticalKind::saddle) cp.tag = Sublattice::S;
    return cp;
}

}  // namespace honeycomb
