#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#ifndef lapack_complex_double
#define lapack_complex_double std::complex<double>
#endif
#include <lapacke.h>

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>

#include "honeycomb/errors.hpp"
#include "honeycomb/geometry.hpp"
#include "honeycomb/parallel.hpp"
#include "honeycomb/potential.hpp"

/// Exact Bloch bands by plane-wave diagonalization.
///
/// H_k u = E u with H_k = (-i grad + k)^2 + (V0/E_R) v(r) in recoil units,
/// expanded on Q = n1 b1' + n2 b2', |n1|, |n2| <= N. Only the six nearest
/// reciprocal vectors couple, so with lexicographic ordering the matrix is
/// banded with half-bandwidth 2N + 2.
namespace honeycomb {

using cplx = std::complex<double>;
using ReciprocalIndex = std::pair<int, int>;

struct FourierPotential {
    std::map<ReciprocalIndex, cplx> coefficients;  ///< v_Q in units of V0

    cplx operator()(int n1, int n2) const {
        auto it = coefficients.find({n1, n2});
        return it == coefficients.end() ? cplx(0.0) : it->second;
    }

    /// sum_Q v_Q exp(i Q.r)
    double evaluate(const Vec2& r, const LatticeVectors& geo) const {
        cplx sum(0.0);
        for (const auto& [idx, v] : coefficients)
            sum += v * std::polar(1.0, geo.reciprocal(idx.first, idx.second).dot(r));
        return sum.real();
    }

    bool is_real() const {
        for (const auto& [idx, v] : coefficients)
            if (v.imag() != 0.0) return false;
        return true;
    }
};

/// v_0 = s1^2 + s2^2 + s3^2, v_{b1} = s1 s2 e^{i phi}, v_{b2} = s1 s3 e^{i phi},
/// v_{b3} = v_{-(b1+b2)} = s2 s3 e^{i phi}, and their Hermitian partners.
inline FourierPotential fourier_coefficients(const BeamConfig& cfg) {
    cfg.validate();
    const auto& s = cfg.strengths;
    const cplx ph = cfg.phase == 0.0 ? cplx(1.0) : std::polar(1.0, cfg.phase);
    FourierPotential fp;
    auto put = [&](int n1, int n2, cplx v) {
        fp.coefficients[{n1, n2}] = v;
        fp.coefficients[{-n1, -n2}] = std::conj(v);
    };
    fp.coefficients[{0, 0}] = s[0] * s[0] + s[1] * s[1] + s[2] * s[2];
    put(1, 0, s[0] * s[1] * ph);
    put(0, 1, s[0] * s[2] * ph);
    put(-1, -1, s[1] * s[2] * ph);
    return fp;
}

/// Default truncation: N = ceil(2.4 / hbar_e) + 2 clamped to [8, 24].
inline int default_cutoff(double hbar_e) {
    const int n = static_cast<int>(std::ceil(2.4 / hbar_e)) + 2;
    return std::clamp(n, 8, 24);
}

/// Plane-wave Hamiltonian for one configuration and cutoff.
class BlochHamiltonian {
public:
    BlochHamiltonian(const BeamConfig& cfg, int cutoff) : BlochHamiltonian(cfg, fourier_coefficients(cfg), cutoff) {}

    /// Explicit coefficients; only the support {0, +-b1, +-b2, +-(b1+b2)} is used.
    BlochHamiltonian(const BeamConfig& cfg, FourierPotential fourier, int cutoff)
        : cfg_(cfg), geo_(build_geometry(cfg)), fourier_(std::move(fourier)), cutoff_(cutoff) {
        if (cutoff < 3) throw ConfigError("plane-wave cutoff must be at least 3");
        scale_ = cfg.detuning == Detuning::blue ? cfg.depth : -cfg.depth;
        real_ = fourier_.is_real();
        static constexpr std::array<ReciprocalIndex, 3> upper{{{0, 1}, {1, 0}, {1, 1}}};
        for (int i = 0; i < 3; ++i) {
            // H(i, j) with Q_j = Q_i + d carries v_{Q_i - Q_j} = v_{-d}
            couplings_[i] = scale_ * fourier_(-upper[i].first, -upper[i].second);
        }
    }

    const BeamConfig& config() const { return cfg_; }
    const LatticeVectors& geometry() const { return geo_; }
    const FourierPotential& fourier() const { return fourier_; }
    int cutoff() const { return cutoff_; }
    int side() const { return 2 * cutoff_ + 1; }
    int dimension() const { return side() * side(); }
    bool real() const { return real_; }

    int index(int n1, int n2) const { return (n1 + cutoff_) * side() + (n2 + cutoff_); }

    double kinetic(const Vec2& k, int n1, int n2) const { return (k + geo_.reciprocal(n1, n2)).squaredNorm(); }

    /// Dense matrix, for tests and small problems.
    Eigen::MatrixXcd dense(const Vec2& k) const {
        const int n = dimension();
        Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(n, n);
        const cplx v0 = scale_ * fourier_(0, 0);
        for (int n1 = -cutoff_; n1 <= cutoff_; ++n1)
            for (int n2 = -cutoff_; n2 <= cutoff_; ++n2) {
                const int i = index(n1, n2);
                h(i, i) = kinetic(k, n1, n2) + v0;
                for (int m1 = -1; m1 <= 1; ++m1)
                    for (int m2 = -1; m2 <= 1; ++m2) {
                        const cplx v = fourier_(m1, m2);
                        if ((m1 == 0 && m2 == 0) || v == cplx(0.0)) continue;
                        const int p1 = n1 - m1, p2 = n2 - m2;  // Q_i - Q_j = (m1, m2)
                        if (std::abs(p1) > cutoff_ || std::abs(p2) > cutoff_) continue;
                        h(i, index(p1, p2)) = scale_ * v;
                    }
            }
        return h;
    }

    /// Lowest `count` eigenvalues (E_R), ascending, from the banded LAPACK solver.
    std::vector<double> lowest(const Vec2& k, int count) const {
        const int n = dimension();
        if (count < 1 || count > n) throw ConfigError("requested band count out of range");
        const int kd = side() + 1;
        const int ldab = kd + 1;
        const double v0 = scale_ * fourier_(0, 0).real();
        std::vector<double> w(n);
        std::vector<lapack_int> ifail(n);
        lapack_int found = 0;
        lapack_int info = 0;
        const std::array<int, 3> offsets{1, side(), side() + 1};

        if (real_) {
            std::vector<double> ab(static_cast<std::size_t>(ldab) * n, 0.0);
            for (int n1 = -cutoff_; n1 <= cutoff_; ++n1)
                for (int n2 = -cutoff_; n2 <= cutoff_; ++n2) {
                    const int i = index(n1, n2);
                    ab[kd + static_cast<std::size_t>(i) * ldab] = kinetic(k, n1, n2) + v0;
                    const std::array<bool, 3> inside{n2 < cutoff_, n1 < cutoff_, n1 < cutoff_ && n2 < cutoff_};
                    for (int d = 0; d < 3; ++d) {
                        if (!inside[d]) continue;
                        const int j = i + offsets[d];
                        ab[kd + i - j + static_cast<std::size_t>(j) * ldab] = couplings_[d].real();
                    }
                }
            double q = 0.0, z = 0.0;
            info = LAPACKE_dsbevx(LAPACK_COL_MAJOR, 'N', 'I', 'U', n, kd, ab.data(), ldab, &q, 1, 0.0, 0.0, 1,
                                  count, 0.0, &found, w.data(), &z, 1, ifail.data());
        } else {
            std::vector<lapack_complex_double> ab(static_cast<std::size_t>(ldab) * n, cplx(0.0));
            for (int n1 = -cutoff_; n1 <= cutoff_; ++n1)
                for (int n2 = -cutoff_; n2 <= cutoff_; ++n2) {
                    const int i = index(n1, n2);
                    ab[kd + static_cast<std::size_t>(i) * ldab] = cplx(kinetic(k, n1, n2) + v0);
                    const std::array<bool, 3> inside{n2 < cutoff_, n1 < cutoff_, n1 < cutoff_ && n2 < cutoff_};
                    for (int d = 0; d < 3; ++d) {
                        if (!inside[d]) continue;
                        const int j = i + offsets[d];
                        ab[kd + i - j + static_cast<std::size_t>(j) * ldab] = couplings_[d];
                    }
                }
            lapack_complex_double q(0.0), z(0.0);
            info = LAPACKE_zhbevx(LAPACK_COL_MAJOR, 'N', 'I', 'U', n, kd, ab.data(), ldab, &q, 1, 0.0, 0.0, 1,
                                  count, 0.0, &found, w.data(), &z, 1, ifail.data());
        }
        if (info != 0 || found != count)
            throw EigensolverFailure("banded eigensolver failed (info " + std::to_string(info) + ")", k.x(), k.y());
        w.resize(count);
        return w;
    }

    /// Lowest eigenvalues from Eigen's dense Hermitian solver; independent of LAPACK.
    std::vector<double> lowest_dense(const Vec2& k, int count) const {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(dense(k), Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success) throw EigensolverFailure("dense eigensolver failed", k.x(), k.y());
        std::vector<double> w(count);
        for (int i = 0; i < count; ++i) w[i] = es.eigenvalues()(i);
        return w;
    }

    /// E_2(k) - E_1(k)
    double gap(const Vec2& k) const {
        const auto w = lowest(k, 2);
        return w[1] - w[0];
    }

private:
    BeamConfig cfg_;
    LatticeVectors geo_;
    FourierPotential fourier_;
    int cutoff_;
    double scale_ = 0.0;
    bool real_ = true;
    std::array<cplx, 3> couplings_{};
};

/// Dense plane-wave matrix at k with the given cutoff.
inline Eigen::MatrixXcd bloch_matrix(const Vec2& k, const BeamConfig& cfg, int cutoff) {
    return BlochHamiltonian(cfg, cutoff).dense(k);
}

/// Sentinel k-points for the convergence probe: Gamma, K and the mid-edge point (b1+b2)/2.
inline std::array<Vec2, 3> sentinel_points(const LatticeVectors& g) {
    return {Vec2::Zero(), g.K, (g.b1 + g.b2) / 2.0};
}

/// Largest shift of the lowest `bands` energies at the sentinel points under N -> N + 2.
inline double convergence_residual(const BeamConfig& cfg, int cutoff, int bands) {
    const BlochHamiltonian lo(cfg, cutoff), hi(cfg, cutoff + 2);
    double res = 0.0;
    for (const Vec2& k : sentinel_points(lo.geometry())) {
        const auto a = lo.lowest(k, bands);
        const auto b = hi.lowest(k, bands);
        for (int i = 0; i < bands; ++i) res = std::max(res, std::abs(a[i] - b[i]));
    }
    return res;
}

struct BandGrid {
    std::vector<Vec2> k;
    std::vector<double> path;                 ///< path parameter or flat grid index per sample
    std::vector<std::vector<double>> energy;  ///< lowest bands per sample, ascending, units of E_R
    int cutoff = 0;
    double residual = 0.0;
};

/// Lowest `bands` energies at every k-sample. Samples run in parallel; each
/// result lands in its own slot so the grid is independent of scheduling.
inline BandGrid solve_bands(const BeamConfig& cfg, const std::vector<Vec2>& samples, int bands,
                            std::optional<int> cutoff = std::nullopt, std::vector<double> path = {},
                            unsigned threads = default_thread_count()) {
    if (bands < 1 || bands > 8) throw ConfigError("band count must be in [1, 8]");
    BandGrid grid;
    grid.cutoff = cutoff.value_or(default_cutoff(cfg.hbar_e()));
    const BlochHamiltonian ham(cfg, grid.cutoff);
    grid.k = samples;
    if (path.empty()) {
        path.resize(samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i) path[i] = static_cast<double>(i);
    }
    grid.path = std::move(path);
    grid.energy.resize(samples.size());
    parallel_for(
        samples.size(), [&](std::size_t i) { grid.energy[i] = ham.lowest(samples[i], bands); }, threads);
    grid.residual = convergence_residual(cfg, grid.cutoff, bands);
    return grid;
}

struct T0Estimate {
    double from_gamma_gap;    ///< (E2(Gamma) - E1(Gamma)) / 6
    double from_cone_slope;   ///< slope of E2 - E1 at K divided by 3a
    int cutoff;
};

/// |t0|/E_R from the exact bands of a balanced, undistorted lattice.
inline T0Estimate extract_t0_numeric(const BeamConfig& cfg, std::optional<int> cutoff = std::nullopt) {
    if (!cfg.undistorted() || cfg.detuning != Detuning::blue)
        throw ConfigError("|t0| extraction requires the balanced, undistorted blue-detuned lattice");
    const int n = cutoff.value_or(default_cutoff(cfg.hbar_e()));
    const BlochHamiltonian ham(cfg, n);
    const LatticeVectors& g = ham.geometry();
    T0Estimate est{};
    est.cutoff = n;
    est.from_gamma_gap = ham.gap(Vec2::Zero()) / 6.0;
    // E_+ - E_- = 2 (3 a |t0| / 2) |q| near K; average two orthogonal directions.
    const double q = 1e-3 * g.kappa;
    const double slope = 0.5 * (ham.gap(g.K + Vec2(q, 0.0)) + ham.gap(g.K + Vec2(0.0, q))) / q;
    est.from_cone_slope = slope / (3.0 * g.a);
    return est;
}

enum class SearchRegion { automatic, symmetry_line, full_zone };

struct GapResult {
    double gap;
    Vec2 k;
    int evaluations = 0;
};

namespace detail {

/// Minimal Nelder-Mead on a 2-D function, used for local polishing.
template <typename F>
std::pair<Vec2, double> nelder_mead(F&& f, Vec2 start, double size, int max_evals, int& evals) {
    std::array<Vec2, 3> x{start, start + Vec2(size, 0.0), start + Vec2(0.0, size)};
    std::array<double, 3> fx{};
    for (int i = 0; i < 3; ++i) fx[i] = f(x[i]);
    evals += 3;
    int used = 3;
    while (used < max_evals) {
        std::array<int, 3> order{0, 1, 2};
        std::sort(order.begin(), order.end(), [&](int a, int b) { return fx[a] < fx[b]; });
        const int best = order[0], mid = order[1], worst = order[2];
        if ((x[worst] - x[best]).norm() < 1e-12) break;
        const Vec2 centroid = (x[best] + x[mid]) / 2.0;
        const Vec2 refl = centroid + (centroid - x[worst]);
        const double fr = f(refl);
        ++used;
        if (fr < fx[best]) {
            const Vec2 exp = centroid + 2.0 * (centroid - x[worst]);
            const double fe = f(exp);
            ++used;
            if (fe < fr) {
                x[worst] = exp;
                fx[worst] = fe;
            } else {
                x[worst] = refl;
                fx[worst] = fr;
            }
        } else if (fr < fx[mid]) {
            x[worst] = refl;
            fx[worst] = fr;
        } else {
            const Vec2 con = centroid + 0.5 * (x[worst] - centroid);
            const double fc = f(con);
            ++used;
            if (fc < fx[worst]) {
                x[worst] = con;
                fx[worst] = fc;
            } else {
                for (int i : {mid, worst}) {
                    x[i] = x[best] + 0.5 * (x[i] - x[best]);
                    fx[i] = f(x[i]);
                    ++used;
                }
            }
        }
    }
    evals += used - 3;
    int best = static_cast<int>(std::min_element(fx.begin(), fx.end()) - fx.begin());
    return {x[best], fx[best]};
}

inline bool ox_symmetric(const BeamConfig& cfg) {
    return cfg.strengths[1] == cfg.strengths[2] && cfg.theta3 == -cfg.theta2;
}

}  // namespace detail

struct GapSearchOptions {
    SearchRegion region = SearchRegion::automatic;
    int coarse = 32;          ///< samples along the line (or per side of the 2-D grid)
    int polish_evals = 40;    ///< Nelder-Mead budget for the 2-D refinement
};

/// Minimum of E2 - E1 over the Brillouin zone.
///
/// For Ox-symmetric configurations the Dirac points live on the line
/// k_x = (b1' + b2')_x / 2 through the mid-edge point; it is scanned coarsely
/// on y in [0, b2'_y], the best sample is polished by Brent, then by an
/// unconstrained 2-D Nelder-Mead. Other configurations use a coarse 2-D grid
/// over the reciprocal cell followed by the same polish.
inline GapResult min_gap(const BlochHamiltonian& ham, const GapSearchOptions& opt = {}) {
    const LatticeVectors& g = ham.geometry();
    SearchRegion region = opt.region;
    if (region == SearchRegion::automatic)
        region = detail::ox_symmetric(ham.config()) ? SearchRegion::symmetry_line : SearchRegion::full_zone;

    int evals = 0;
    auto gap = [&](const Vec2& k) {
        ++evals;
        return ham.gap(k);
    };

    Vec2 best_k;
    double best = std::numeric_limits<double>::infinity();
    if (region == SearchRegion::symmetry_line) {
        const double x = 0.5 * (g.b1 + g.b2).x();
        const double ymax = std::abs(g.b2.y());
        const int n = std::max(8, opt.coarse);
        const double h = ymax / n;
        std::vector<double> vals(n + 1);
        for (int i = 0; i <= n; ++i) vals[i] = gap(Vec2(x, i * h));
        const int imin = static_cast<int>(std::min_element(vals.begin(), vals.end()) - vals.begin());
        const double lo = (imin - 1) * h, hi = (imin + 1) * h;
        std::uintmax_t iters = 200;
        auto line = [&](double y) { return gap(Vec2(x, y)); };
        const auto [ystar, gstar] = boost::math::tools::brent_find_minima(line, lo, hi, 52, iters);
        best_k = Vec2(x, ystar);
        best = gstar;
        if (vals[imin] < best) {
            best = vals[imin];
            best_k = Vec2(x, imin * h);
        }
    } else {
        const int n = std::max(8, opt.coarse);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const Vec2 k = g.reciprocal(static_cast<double>(i) / n, static_cast<double>(j) / n);
                const double v = gap(k);
                if (v < best) {
                    best = v;
                    best_k = k;
                }
            }
        auto [k2, v2] = detail::nelder_mead(gap, best_k, 0.5 * g.kappa / n, opt.polish_evals * 3, evals);
        if (v2 < best) {
            best = v2;
            best_k = k2;
        }
    }

    auto [kp, vp] = detail::nelder_mead(gap, best_k, 1e-4 * g.kappa, opt.polish_evals, evals);
    if (vp < best) {
        best = vp;
        best_k = kp;
    }
    return {std::max(best, 0.0), g.reduce_to_zone(best_k), evals};
}

inline GapResult min_gap(const BeamConfig& cfg, const GapSearchOptions& opt = {},
                         std::optional<int> cutoff = std::nullopt) {
    return min_gap(BlochHamiltonian(cfg, cutoff.value_or(default_cutoff(cfg.hbar_e()))), opt);
}

/// Degeneracy counts as lifted once the gap exceeds max(1e-6 E_R, 10 x residual).
inline double lifted_threshold(double residual) { return std::max(1e-6, 10.0 * residual); }

enum class Distortion { strength, angle };

inline std::string to_string(Distortion d) { return d == Distortion::strength ? "strength-eta" : "angle-theta"; }

/// Apply the one-parameter deformation: s1 = 1 + p, or theta3 = -theta2 = p.
inline BeamConfig deform(BeamConfig cfg, Distortion family, double p) {
    if (family == Distortion::strength) {
        cfg.strengths[0] = 1.0 + p;
    } else {
        cfg.theta3 = p;
        cfg.theta2 = -p;
    }
    return cfg;
}

struct CriticalOptions {
    std::optional<std::pair<double, double>> bracket;  ///< defaults per family, see default_bracket
    int probes = 4;             ///< interior samples for the monotonicity check
    double rel_tol = 1e-3;
    std::optional<int> cutoff;
    GapSearchOptions search{};
};

struct CriticalResult {
    double value;
    double lo, hi;                        ///< final bracket
    std::vector<std::pair<double, bool>> samples;  ///< (parameter, lifted) of every predicate call
};

inline std::pair<double, double> default_bracket(Distortion family, double hbar_e) {
    if (family == Distortion::strength) return {0.0, std::min(0.9, hbar_e)};
    return {0.0, std::min(0.3 * std::numbers::pi, 1.2 * hbar_e)};
}

/// Critical distortion at which the Dirac degeneracy is lifted, by bisection on
/// the predicate min_gap > lifted_threshold(residual).
inline CriticalResult critical_parameter(const BeamConfig& base, Distortion family, double hbar_e,
                                         const CriticalOptions& opt = {}) {
    BeamConfig tmpl = base;
    tmpl.depth = 2.0 / (hbar_e * hbar_e);
    const int cutoff = opt.cutoff.value_or(default_cutoff(hbar_e));

    CriticalResult res{};
    auto lifted = [&](double p) {
        const BeamConfig cfg = deform(tmpl, family, p);
        const double residual = convergence_residual(cfg, cutoff, 2);
        const GapResult gr = min_gap(BlochHamiltonian(cfg, cutoff), opt.search);
        const bool out = gr.gap > lifted_threshold(residual);
        res.samples.emplace_back(p, out);
        return out;
    };

    auto [lo, hi] = opt.bracket.value_or(default_bracket(family, hbar_e));
    if (!(hi > lo)) throw ConfigError("critical-parameter bracket must satisfy lo < hi");

    const int m = std::max(0, opt.probes);
    std::vector<double> ps;
    std::vector<bool> flags;
    for (int i = 0; i <= m + 1; ++i) {
        ps.push_back(lo + (hi - lo) * i / (m + 1));
        flags.push_back(lifted(ps.back()));
    }
    if (flags.front() || !flags.back())
        throw BracketingFailure("predicate does not change from closed to lifted across [" + std::to_string(lo) +
                                ", " + std::to_string(hi) + "]");
    int flip = -1;
    for (int i = 1; i < static_cast<int>(flags.size()); ++i) {
        if (flags[i] && !flags[i - 1]) {
            if (flip >= 0) throw BracketingFailure("predicate is not monotone on the bracketing samples");
            flip = i;
        } else if (!flags[i] && flags[i - 1]) {
            throw BracketingFailure("predicate is not monotone on the bracketing samples");
        }
    }
    lo = ps[flip - 1];
    hi = ps[flip];
    while (hi - lo > opt.rel_tol * hi) {
        const double mid = 0.5 * (lo + hi);
        (lifted(mid) ? hi : lo) = mid;
    }
    res.value = 0.5 * (lo + hi);
    res.lo = lo;
    res.hi = hi;
    return res;
}

struct ScalingFit {
    double alpha;     ///< linear coefficient
    double beta;      ///< quadratic coefficient
    double residual;  ///< Euclidean norm of the fit residuals
};

/// Least-squares fit of y = alpha x + beta x^2.
inline ScalingFit fit_critical_scaling(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 4) throw ConfigError("scaling fit needs at least four points");
    Eigen::MatrixXd A(points.size(), 2);
    Eigen::VectorXd y(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        A(i, 0) = points[i].first;
        A(i, 1) = points[i].first * points[i].first;
        y(i) = points[i].second;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    qr.setThreshold(1e-12);
    if (qr.rank() < 2) throw RankDeficient("scaling fit is rank deficient (need distinct nonzero hbar_e)");
    const Eigen::Vector2d c = qr.solve(y);
    return {c(0), c(1), (A * c - y).norm()};
}

}  // namespace honeycomb
