#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

#include "honeycomb/errors.hpp"
#include "honeycomb/geometry.hpp"
#include "honeycomb/parallel.hpp"

/// Nearest-neighbour tight-binding model on the honeycomb lattice.
namespace honeycomb {

using cplx = std::complex<double>;

struct HoppingSet {
    std::array<cplx, 3> t{cplx(1.0), cplx(1.0), cplx(1.0)};
    double epsilon = 0.0;  ///< half the A-B on-site energy difference

    static HoppingSet balanced(cplx t0 = cplx(1.0)) { return {{t0, t0, t0}, 0.0}; }

    /// t1 = gamma t0, t2 = t3 = t0.
    static HoppingSet one_imbalanced(double gamma, cplx t0 = cplx(1.0)) { return {{gamma * t0, t0, t0}, 0.0}; }

    double max_magnitude() const { return std::max({std::abs(t[0]), std::abs(t[1]), std::abs(t[2])}); }

    void validate() const {
        if (max_magnitude() == 0.0) throw ConfigError("at least one hopping amplitude must be nonzero");
        if (!std::isfinite(epsilon)) throw ConfigError("on-site energy must be finite");
    }
};

/// Z_k = sum_n t_n exp(i k . c_n).
inline cplx structure_factor(const Vec2& k, const HoppingSet& h, const std::array<Vec2, 3>& c) {
    cplx z(0.0);
    for (int n = 0; n < 3; ++n) z += h.t[n] * std::polar(1.0, k.dot(c[n]));
    return z;
}

/// (eps_-, eps_+) = -/+ sqrt(epsilon^2 + |Z_k|^2).
inline std::pair<double, double> tb_bands(const Vec2& k, const HoppingSet& h, const std::array<Vec2, 3>& c) {
    const double e = std::hypot(h.epsilon, std::abs(structure_factor(k, h, c)));
    return {-e, e};
}

struct DiracPair {
    Vec2 k;        ///< k_D, reduced to the first Brillouin zone
    Vec2 kp;       ///< k_D'
    bool merged;   ///< k_D and k_D' coincide modulo reciprocal translations
};

/// True when |t_n| satisfy the triangle (norm) inequalities.
inline bool hopping_triangle_ok(const HoppingSet& h) {
    const double x = std::abs(h.t[0]), y = std::abs(h.t[1]), z = std::abs(h.t[2]);
    return std::abs(y - z) <= x && x <= y + z;
}

/// Dirac points of a massless hopping model, or nullopt if the triangle
/// inequalities fail.
///
/// With p the largest |t| and q, r the other two, Z_k e^{-i k.c_p} = |t_p| +
/// |t_q| e^{i X_q} + |t_r| e^{i X_r}, X_n = k.(c_n - c_p) + arg t_n - arg t_p.
/// Vanishing requires cos X_q = (|t_r|^2 - |t_p|^2 - |t_q|^2)/(2|t_p t_q|),
/// cos X_r = (|t_q|^2 - |t_p|^2 - |t_r|^2)/(2|t_p t_r|) and
/// |t_q| sin X_q + |t_r| sin X_r = 0. All four arccos sign branches are
/// enumerated; those meeting the sine constraint give k_D and k_D'.
inline std::optional<DiracPair> tb_dirac_points(const HoppingSet& h, const LatticeVectors& geo) {
    h.validate();
    if (h.epsilon != 0.0) throw NonzeroMass("Dirac points require a vanishing on-site imbalance");
    if (!hopping_triangle_ok(h)) return std::nullopt;

    std::array<double, 3> mag{std::abs(h.t[0]), std::abs(h.t[1]), std::abs(h.t[2])};
    const int p = static_cast<int>(std::max_element(mag.begin(), mag.end()) - mag.begin());
    const int q = (p + 1) % 3, r = (p + 2) % 3;
    if (mag[q] == 0.0 || mag[r] == 0.0)
        throw DegenerateHopping("a vanishing hopping with equal partners gives a nodal line, not Dirac points");

    const double cq = std::clamp((mag[r] * mag[r] - mag[p] * mag[p] - mag[q] * mag[q]) / (2.0 * mag[p] * mag[q]),
                                 -1.0, 1.0);
    const double cr = std::clamp((mag[q] * mag[q] - mag[p] * mag[p] - mag[r] * mag[r]) / (2.0 * mag[p] * mag[r]),
                                 -1.0, 1.0);
    const double xq = std::acos(cq), xr = std::acos(cr);
    const double phase_q = std::arg(h.t[q]) - std::arg(h.t[p]);
    const double phase_r = std::arg(h.t[r]) - std::arg(h.t[p]);

    const Vec2 dq = geo.c[q] - geo.c[p];
    const Vec2 dr = geo.c[r] - geo.c[p];
    Eigen::Matrix2d D;
    D << dq.x(), dq.y(), dr.x(), dr.y();
    const Eigen::Matrix2d Dinv = D.inverse();

    const double scale = mag[p];
    std::vector<Vec2> found;
    for (int sq : {1, -1}) {
        for (int sr : {1, -1}) {
            const double Xq = sq * xq, Xr = sr * xr;
            if (std::abs(mag[q] * std::sin(Xq) + mag[r] * std::sin(Xr)) > 1e-9 * scale) continue;
            const Vec2 k = Dinv * Vec2(Xq - phase_q, Xr - phase_r);
            const Vec2 kz = geo.reduce_to_zone(k);
            bool dup = false;
            for (const auto& f : found)
                if (geo.zone_distance(f, kz) < 1e-9) dup = true;
            if (!dup) found.push_back(kz);
        }
    }
    if (found.empty()) return std::nullopt;

    // Canonical order: the branch with the larger k_y first (ties by k_x).
    std::sort(found.begin(), found.end(), [](const Vec2& u, const Vec2& v) {
        return u.y() != v.y() ? u.y() > v.y() : u.x() > v.x();
    });
    if (found.size() == 1) return DiracPair{found[0], found[0], true};
    const bool merged = geo.zone_distance(found[0], found[1]) <= 1e-6 * geo.kappa;
    return DiracPair{found[0], found[1], merged};
}

inline std::optional<DiracPair> tb_dirac_points(const HoppingSet& h) {
    return tb_dirac_points(h, build_geometry(BeamConfig{}));
}

/// Characteristic scales of the balanced tight-binding model (hbar = 1).
struct TbScales {
    double bandwidth;       ///< W = 6|t0|
    double fermi_energy;    ///< E_F = 3|t0|, measured from the band bottom
    double fermi_velocity;  ///< v0 = 3 a |t0| / 2
    double mass;            ///< m* = epsilon / v0^2
};

inline TbScales tb_scales(cplx t0, double a, double epsilon = 0.0) {
    if (t0 == cplx(0.0)) throw ConfigError("t0 must be nonzero");
    const double m = std::abs(t0);
    const double v0 = 1.5 * a * m;
    return {6.0 * m, 3.0 * m, v0, epsilon / (v0 * v0)};
}

struct DosHistogram {
    std::vector<double> energy;  ///< bin centres in units of |t0|
    std::vector<double> lower;   ///< density of the lower band per unit cell per spin
    std::vector<double> upper;   ///< density of the upper band
    double bin_width = 0.0;
    double t_ref = 0.0;          ///< |t0| used as energy unit: mean of |t_n|

    double total(std::size_t i) const { return lower[i] + upper[i]; }
};

/// Flat histogram of the two bands on a uniform N x N grid of the reciprocal cell.
///
/// Energies are measured from the Dirac energy (zero) in units of the mean
/// |t_n|; the histogram range is symmetric, so with an even bin count zero is a
/// bin edge. Counts are integers per bin, summed over k-chunks.
inline DosHistogram tb_dos(const HoppingSet& h, int grid, int bins, const LatticeVectors& geo,
                           unsigned threads = default_thread_count()) {
    h.validate();
    if (grid < 100) throw ConfigError("DOS grid must be at least 100 x 100");
    if (bins < 50) throw ConfigError("DOS needs at least 50 bins");

    DosHistogram out;
    out.t_ref = (std::abs(h.t[0]) + std::abs(h.t[1]) + std::abs(h.t[2])) / 3.0;
    const double emax =
        std::hypot(h.epsilon, std::abs(h.t[0]) + std::abs(h.t[1]) + std::abs(h.t[2])) / out.t_ref * (1.0 + 1e-9);
    out.bin_width = 2.0 * emax / bins;

    std::vector<std::vector<std::int64_t>> lower(grid), upper(grid);
    parallel_for(
        static_cast<std::size_t>(grid),
        [&](std::size_t i) {
            auto& lo = lower[i];
            auto& hi = upper[i];
            lo.assign(bins, 0);
            hi.assign(bins, 0);
            for (int j = 0; j < grid; ++j) {
                const Vec2 k = geo.reciprocal(static_cast<double>(i) / grid, static_cast<double>(j) / grid);
                const double e = tb_bands(k, h, geo.c).second / out.t_ref;
                auto bin = [&](double x) {
                    int b = static_cast<int>(std::floor((x + emax) / out.bin_width));
                    return std::clamp(b, 0, bins - 1);
                };
                ++lo[bin(-e)];
                ++hi[bin(e)];
            }
        },
        threads);

    const double norm = 1.0 / (static_cast<double>(grid) * grid * out.bin_width);
    out.energy.resize(bins);
    out.lower.assign(bins, 0.0);
    out.upper.assign(bins, 0.0);
    for (int b = 0; b < bins; ++b) {
        std::int64_t lo = 0, hi = 0;
        for (int i = 0; i < grid; ++i) {
            lo += lower[i][b];
            hi += upper[i][b];
        }
        out.energy[b] = -emax + (b + 0.5) * out.bin_width;
        out.lower[b] = lo * norm;
        out.upper[b] = hi * norm;
    }
    return out;
}

inline DosHistogram tb_dos(const HoppingSet& h, int grid, int bins) {
    return tb_dos(h, grid, bins, build_geometry(BeamConfig{}));
}

}  // namespace honeycomb
