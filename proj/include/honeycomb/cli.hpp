#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "honeycomb/errors.hpp"
#include "honeycomb/geometry.hpp"
#include "honeycomb/kpath.hpp"
#include "honeycomb/parallel.hpp"
#include "honeycomb/planewave.hpp"
#include "honeycomb/potential.hpp"
#include "honeycomb/semiclassics.hpp"
#include "honeycomb/tightbinding.hpp"

/// Command-line front end: config resolution, dispatch, CSV/JSON emission.
namespace honeycomb::cli {

using json = nlohmann::ordered_json;

inline const std::vector<std::string>& commands() {
    static const std::vector<std::string> names{"geom", "pot",  "minima", "bands",     "tb-bands",   "dirac",
                                                "dos",  "t0",   "sweep-eta", "sweep-theta", "phase-scan"};
    return names;
}

/// Every recognised key with its default. Keys absent here are rejected.
inline json default_config() {
    const json unit_hops = json::array({json::array({1.0, 0.0}), json::array({1.0, 0.0}), json::array({1.0, 0.0})});
    return json{
        {"beam",
         {{"strengths", {1.0, 1.0, 1.0}},
          {"theta2", 0.0},
          {"theta3", 0.0},
          {"phase", 0.0},
          {"depth", 32.0},
          {"detuning", "blue"}}},
        {"units", "er"},
        {"seed", 0},
        {"pot", {{"x_min", -4.0}, {"x_max", 4.0}, {"y_min", -4.0}, {"y_max", 4.0}, {"nx", 81}, {"ny", 81}}},
        {"bands", {{"path", "G-K-M-G"}, {"samples_per_segment", 32}, {"n", 4}, {"cutoff", nullptr}}},
        {"tb-bands", {{"path", "G-K-M-G"}, {"samples_per_segment", 32}, {"t", unit_hops}, {"epsilon", 0.0}}},
        {"dirac", {{"gamma", {0.25, 0.5, 1.0, 1.5, 2.0, 2.5}}}},
        {"dos", {{"t", unit_hops}, {"epsilon", 0.0}, {"grid", 1000}, {"bins", 200}}},
        {"t0", {{"v0", {10.0, 20.0, 32.0, 50.0, 80.0}}, {"cutoff", nullptr}}},
        {"sweep",
         {{"hbar_e", {0.15, 0.2, 0.25, 0.3, 0.35}},
          {"bracket", nullptr},
          {"probes", 4},
          {"rel_tol", 1e-3},
          {"cutoff", nullptr}}},
        {"phase-scan", {{"phi_max", std::numbers::pi / 48.0}, {"steps", 9}}},
    };
}

/// Overlay `in` onto `base`, rejecting unknown keys and mismatched types.
inline void merge_strict(json& base, const json& in, const std::string& where = "") {
    if (!in.is_object()) throw ConfigError("config" + where + " must be a JSON object");
    for (const auto& [key, value] : in.items()) {
        const std::string path = where + "." + key;
        if (!base.contains(key)) throw ConfigError("unknown config key '" + path.substr(1) + "'");
        json& slot = base[key];
        if (slot.is_object()) {
            merge_strict(slot, value, path);
        } else if (slot.is_null() || value.is_null() || (slot.is_number() && value.is_number()) ||
                   slot.type() == value.type()) {
            slot = value;
        } else {
            throw ConfigError("config key '" + path.substr(1) + "' has the wrong type");
        }
    }
}

template <typename T>
T get(const json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

inline BeamConfig beam_from_json(const json& j) {
    BeamConfig cfg;
    const auto s = get<std::vector<double>>(j, "strengths");
    if (s.size() != 3) throw ConfigError("beam.strengths needs three values");
    cfg.strengths = {s[0], s[1], s[2]};
    cfg.theta2 = get<double>(j, "theta2");
    cfg.theta3 = get<double>(j, "theta3");
    cfg.phase = get<double>(j, "phase");
    cfg.depth = get<double>(j, "depth");
    const auto det = get<std::string>(j, "detuning");
    if (det == "blue")
        cfg.detuning = Detuning::blue;
    else if (det == "red")
        cfg.detuning = Detuning::red;
    else
        throw ConfigError("beam.detuning must be 'blue' or 'red'");
    cfg.validate();
    return cfg;
}

inline HoppingSet hops_from_json(const json& section) {
    HoppingSet h;
    const json& t = section.at("t");
    if (!t.is_array() || t.size() != 3) throw ConfigError("hoppings 't' need three [re, im] pairs");
    for (int n = 0; n < 3; ++n) {
        const auto p = t[n].get<std::vector<double>>();
        if (p.size() != 2) throw ConfigError("each hopping is a [re, im] pair");
        h.t[n] = cplx(p[0], p[1]);
    }
    h.epsilon = get<double>(section, "epsilon");
    h.validate();
    return h;
}

/// 17 significant digits, '.' decimal point, independent of locale.
inline std::string fmt(double x) {
    if (std::isnan(x)) return "nan";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

class Csv {
public:
    explicit Csv(std::vector<std::string> header) : width_(header.size()) { row_strings(header); }

    void row(std::initializer_list<std::string> cells) { row_strings(std::vector<std::string>(cells)); }

    void row_strings(const std::vector<std::string>& cells) {
        if (cells.size() != width_) throw std::logic_error("csv row width mismatch");
        for (std::size_t i = 0; i < cells.size(); ++i) text_ += (i ? "," : "") + cells[i];
        text_ += "\n";
    }

    const std::string& str() const { return text_; }

private:
    std::size_t width_;
    std::string text_;
};

struct Output {
    std::string csv;
    json meta = json::object();
    std::vector<std::string> messages;  ///< human notes for stderr
};

struct Context {
    json config;
    BeamConfig beam;
    double unit_scale = 1.0;  ///< multiply E_R energies by this for output
    unsigned threads = 1;
};

inline Output cmd_geom(const Context& ctx) {
    const LatticeVectors g = build_geometry(ctx.beam);
    Csv csv({"name", "x", "y"});
    auto put = [&](const std::string& n, const Vec2& v) { csv.row({n, fmt(v.x()), fmt(v.y())}); };
    for (int i = 0; i < 3; ++i) put("k" + std::to_string(i + 1), g.k[i]);
    put("b1", g.b1);
    put("b2", g.b2);
    put("a1", g.a1);
    put("a2", g.a2);
    for (int i = 0; i < 3; ++i) put("c" + std::to_string(i + 1), g.c[i]);
    put("K", g.K);
    put("Kp", g.Kp);
    Output out;
    out.csv = csv.str();
    out.meta["derived"] = {{"Lambda", g.Lambda}, {"a", g.a}, {"kappa", g.kappa}, {"hbar_e", ctx.beam.hbar_e()}};
    return out;
}

inline Output cmd_pot(const Context& ctx) {
    const json& p = ctx.config.at("pot");
    const double x0 = get<double>(p, "x_min"), x1 = get<double>(p, "x_max");
    const double y0 = get<double>(p, "y_min"), y1 = get<double>(p, "y_max");
    const int nx = get<int>(p, "nx"), ny = get<int>(p, "ny");
    if (nx < 2 || ny < 2 || !(x1 > x0) || !(y1 > y0)) throw ConfigError("pot grid needs nx, ny >= 2 and a non-empty box");
    const Potential pot(ctx.beam);
    Csv csv({"x", "y", "v"});
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const Vec2 r(x0 + (x1 - x0) * i / (nx - 1), y0 + (y1 - y0) * j / (ny - 1));
            csv.row({fmt(r.x()), fmt(r.y()), fmt(pot.value(r))});
        }
    Output out;
    out.csv = csv.str();
    return out;
}

inline Output cmd_minima(const Context& ctx) {
    if (ctx.beam.detuning == Detuning::red)
        throw ConfigError("red detuning gives a triangular lattice; critical-point analysis covers blue detuning only");
    const MinimaPair m = locate_minima(ctx.beam);
    const SaddleSet s = locate_saddles(ctx.beam);
    Csv csv({"label", "kind", "x", "y", "v", "barrier", "bond"});
    for (const CriticalPoint* cp : {&m.A, &m.B})
        csv.row({to_string(cp->tag), to_string(cp->kind), fmt(cp->position.x()), fmt(cp->position.y()),
                 fmt(cp->value), "", ""});
    for (const Saddle& sd : s.saddles)
        csv.row({"S" + std::to_string(sd.bond), to_string(sd.point.kind), fmt(sd.point.position.x()),
                 fmt(sd.point.position.y()), fmt(sd.point.value), fmt(sd.barrier), std::to_string(sd.bond)});
    Output out;
    out.csv = csv.str();
    out.meta["saddles_merged"] = s.merged;
    out.meta["columns"] = {{"v", "units of V0"}, {"barrier", "units of V0"}};
    return out;
}

inline Output cmd_bands(const Context& ctx) {
    const json& b = ctx.config.at("bands");
    const LatticeVectors g = build_geometry(ctx.beam);
    const KPath path = k_path(get<std::string>(b, "path"), g, get<int>(b, "samples_per_segment"));
    const int n = get<int>(b, "n");
    std::optional<int> cutoff;
    if (!b.at("cutoff").is_null()) cutoff = get<int>(b, "cutoff");
    const BandGrid grid = solve_bands(ctx.beam, path.k, n, cutoff, path.s, ctx.threads);

    std::vector<std::string> header{"path_s", "k_x", "k_y"};
    for (int i = 1; i <= n; ++i) header.push_back("e" + std::to_string(i));
    header.push_back("residual");
    Csv csv(header);
    for (std::size_t i = 0; i < grid.k.size(); ++i) {
        std::vector<std::string> cells{fmt(grid.path[i]), fmt(grid.k[i].x()), fmt(grid.k[i].y())};
        for (double e : grid.energy[i]) cells.push_back(fmt(e * ctx.unit_scale));
        cells.push_back(fmt(grid.residual * ctx.unit_scale));
        csv.row_strings(cells);
    }
    Output out;
    out.csv = csv.str();
    out.meta["cutoff"] = grid.cutoff;
    out.meta["residual"] = grid.residual * ctx.unit_scale;
    json labels = json::array();
    for (const auto& [name, s] : path.labels) labels.push_back({{"label", name}, {"path_s", s}});
    out.meta["labels"] = labels;
    return out;
}

inline Output cmd_tb_bands(const Context& ctx) {
    const json& sec = ctx.config.at("tb-bands");
    const HoppingSet h = hops_from_json(sec);
    const LatticeVectors g = build_geometry(ctx.beam);
    const KPath path = k_path(get<std::string>(sec, "path"), g, get<int>(sec, "samples_per_segment"));
    Csv csv({"k_x", "k_y", "e_minus", "e_plus"});
    for (const Vec2& k : path.k) {
        const auto [lo, hi] = tb_bands(k, h, g.c);
        csv.row({fmt(k.x()), fmt(k.y()), fmt(lo), fmt(hi)});
    }
    Output out;
    out.csv = csv.str();
    out.meta["columns"] = {{"e_minus", "units of the hoppings"}, {"e_plus", "units of the hoppings"}};
    return out;
}

inline Output cmd_dirac(const Context& ctx) {
    const auto gammas = get<std::vector<double>>(ctx.config.at("dirac"), "gamma");
    if (gammas.empty()) throw ConfigError("dirac needs at least one gamma");
    const LatticeVectors g = build_geometry(ctx.beam);
    Output out;
    Csv csv({"gamma", "k_Dx", "k_Dy", "exists", "merged"});
    for (double gamma : gammas) {
        if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
        const auto pair = tb_dirac_points(HoppingSet::one_imbalanced(gamma), g);
        if (!pair) {
            csv.row({fmt(gamma), "", "", "0", "0"});
            out.messages.push_back("gamma " + fmt(gamma) + ": no Dirac points");
        } else {
            csv.row({fmt(gamma), fmt(pair->k.x()), fmt(pair->k.y()), "1", pair->merged ? "1" : "0"});
        }
    }
    out.csv = csv.str();
    return out;
}

inline Output cmd_dos(const Context& ctx) {
    const json& sec = ctx.config.at("dos");
    const HoppingSet h = hops_from_json(sec);
    const DosHistogram d =
        tb_dos(h, get<int>(sec, "grid"), get<int>(sec, "bins"), build_geometry(ctx.beam), ctx.threads);
    Csv csv({"energy", "rho", "rho_lower", "rho_upper"});
    for (std::size_t i = 0; i < d.energy.size(); ++i)
        csv.row({fmt(d.energy[i]), fmt(d.total(i)), fmt(d.lower[i]), fmt(d.upper[i])});
    Output out;
    out.csv = csv.str();
    out.meta["bin_width"] = d.bin_width;
    out.meta["t_ref"] = d.t_ref;
    return out;
}

inline Output cmd_t0(const Context& ctx) {
    const json& sec = ctx.config.at("t0");
    const auto depths = get<std::vector<double>>(sec, "v0");
    if (depths.empty()) throw ConfigError("t0 needs at least one V0/E_R");
    std::optional<int> cutoff;
    if (!sec.at("cutoff").is_null()) cutoff = get<int>(sec, "cutoff");
    for (double v : depths)
        if (!(v > 0.0)) throw ConfigError("V0/E_R must be positive");

    std::vector<T0Estimate> exact(depths.size());
    parallel_for(
        depths.size(),
        [&](std::size_t i) {
            BeamConfig cfg;
            cfg.depth = depths[i];
            exact[i] = extract_t0_numeric(cfg, cutoff);
        },
        ctx.threads);

    Output out;
    Csv csv({"v0", "method", "t0", "ratio_to_exact"});
    json marginal = json::array();
    json bounds = json::array();
    for (std::size_t i = 0; i < depths.size(); ++i) {
        const double v = depths[i];
        const double ref = exact[i].from_gamma_gap;
        // --units v0 reports |t0| / V0.
        const double scale = ctx.unit_scale == 1.0 ? 1.0 : 1.0 / v;
        auto put = [&](const char* method, double t) {
            csv.row({fmt(v), method, fmt(t * scale), fmt(t / ref)});
        };
        put("exact_gamma_gap", ref);
        put("exact_cone_slope", exact[i].from_cone_slope);
        if (v >= 5.0) {
            put("semiclassical", t0_semiclassical(v));
            put("semiclassical_rounded", t0_printed_formula(v));
            if (tight_binding_marginal(v)) marginal.push_back(v);
            const ExperimentalBounds eb = experimental_bounds(v);
            bounds.push_back({{"v0", v},
                              {"bandwidth", eb.bandwidth},
                              {"fermi_energy", eb.fermi_energy},
                              {"temperature_ratio", eb.temperature_ratio}});
        } else {
            out.messages.push_back("V0/E_R = " + fmt(v) + " is below the tight-binding guard; semiclassical rows omitted");
        }
        put("harmonic", std::abs(t0_harmonic(v).t0));
    }
    out.csv = csv.str();
    const InstantonResult& inst = instanton();
    out.meta["instanton"] = {{"S0", inst.action},
                             {"alpha1", inst.alpha1},
                             {"alpha2", inst.alpha2},
                             {"alpha", inst.alpha},
                             {"prefactor", inst.printed_prefactor()},
                             {"exponent", inst.printed_exponent()}};
    out.meta["marginal_depths"] = marginal;
    out.meta["bounds"] = bounds;
    return out;
}

inline Output cmd_sweep(const Context& ctx, Distortion family) {
    const json& sec = ctx.config.at("sweep");
    auto hbars = get<std::vector<double>>(sec, "hbar_e");
    std::sort(hbars.begin(), hbars.end());
    if (hbars.size() < 4) throw ConfigError("a sweep needs at least four hbar_e values");
    for (double h : hbars)
        if (!(h > 0.0)) throw ConfigError("hbar_e values must be positive");
    CriticalOptions opt;
    opt.probes = get<int>(sec, "probes");
    opt.rel_tol = get<double>(sec, "rel_tol");
    if (!(opt.rel_tol > 0.0)) throw ConfigError("rel_tol must be positive");
    if (!sec.at("cutoff").is_null()) opt.cutoff = get<int>(sec, "cutoff");
    if (!sec.at("bracket").is_null()) {
        const auto br = get<std::vector<double>>(sec, "bracket");
        if (br.size() != 2) throw ConfigError("sweep.bracket needs [lo, hi]");
        opt.bracket = std::make_pair(br[0], br[1]);
    }

    struct Row {
        std::optional<CriticalResult> result;
        std::string status = "ok";
    };
    std::vector<Row> rows(hbars.size());
    parallel_for(
        hbars.size(),
        [&](std::size_t i) {
            try {
                rows[i].result = critical_parameter(ctx.beam, family, hbars[i], opt);
            } catch (const NumericalError& e) {
                rows[i].status = e.kind();
            }
        },
        ctx.threads);

    Csv csv({"hbar_e", "critical_value", "bracket_lo", "bracket_hi", "status"});
    std::vector<std::pair<double, double>> points;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].result) {
            const CriticalResult& r = *rows[i].result;
            csv.row({fmt(hbars[i]), fmt(r.value), fmt(r.lo), fmt(r.hi), rows[i].status});
            points.emplace_back(hbars[i], r.value);
        } else {
            csv.row({fmt(hbars[i]), "", "", "", rows[i].status});
        }
    }
    if (points.size() < 4)
        throw BracketingFailure("only " + std::to_string(points.size()) + " sweep rows succeeded; the fit needs four");
    const ScalingFit fit = fit_critical_scaling(points);
    Output out;
    out.csv = csv.str();
    out.meta["family"] = to_string(family);
    out.meta["fit"] = {{"alpha_fit", fit.alpha}, {"beta_fit", fit.beta}, {"residual", fit.residual}};
    if (family == Distortion::angle)
        out.meta["fit_over_pi"] = {{"alpha_fit", fit.alpha / std::numbers::pi},
                                   {"beta_fit", fit.beta / std::numbers::pi}};
    return out;
}

inline Output cmd_phase_scan(const Context& ctx) {
    const json& sec = ctx.config.at("phase-scan");
    const double phi_max = get<double>(sec, "phi_max");
    const int steps = get<int>(sec, "steps");
    if (steps < 3 || !(phi_max > 0.0)) throw ConfigError("phase-scan needs steps >= 3 and phi_max > 0");
    const int cutoff = default_cutoff(ctx.beam.hbar_e());
    std::vector<double> phis(steps), gaps(steps);
    parallel_for(
        static_cast<std::size_t>(steps),
        [&](std::size_t i) {
            BeamConfig cfg = ctx.beam;
            cfg.phase = phi_max * static_cast<double>(i) / (steps - 1);
            const BlochHamiltonian ham(cfg, cutoff);
            phis[i] = cfg.phase;
            gaps[i] = ham.gap(ham.geometry().K);
        },
        ctx.threads);

    Eigen::MatrixXd A(steps, 2);
    Eigen::VectorXd y(steps);
    for (int i = 0; i < steps; ++i) {
        A(i, 0) = 1.0;
        A(i, 1) = phis[i];
        y(i) = gaps[i];
    }
    const Eigen::Vector2d c = A.colPivHouseholderQr().solve(y);
    const double ss_res = (A * c - y).squaredNorm();
    const double ss_tot = (y.array() - y.mean()).matrix().squaredNorm();
    bool monotone = true;
    for (int i = 1; i < steps; ++i) monotone = monotone && gaps[i] > gaps[i - 1];

    Csv csv({"phi", "gap_K"});
    for (int i = 0; i < steps; ++i) csv.row({fmt(phis[i]), fmt(gaps[i] * ctx.unit_scale)});
    Output out;
    out.csv = csv.str();
    out.meta["fit"] = {{"intercept", c(0) * ctx.unit_scale},
                       {"slope", c(1) * ctx.unit_scale},
                       {"slope_over_v0", c(1) / ctx.beam.depth},
                       {"r_squared", ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0},
                       {"monotone", monotone}};
    out.meta["reference_coefficients"] = {{"6sqrt3", 6.0 * std::sqrt(3.0)}, {"8_over_sqrt3", 8.0 / std::sqrt(3.0)}};
    out.meta["cutoff"] = cutoff;
    return out;
}

/// Write `text` to `path` through a temporary file and rename.
inline void write_atomic(const std::filesystem::path& path, const std::string& tmp_suffix, const std::string& text) {
    const std::filesystem::path tmp = path.string() + tmp_suffix;
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw ConfigError("cannot open output file " + tmp.string());
        f << text;
        if (!f.flush()) throw ConfigError("failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline json error_json(const std::string& kind, const std::string& message, int code) {
    return json{{"error", kind}, {"message", message}, {"exit_code", code}};
}

/// Parse and run one command. `args` excludes the program name.
/// Returns 0 on success, 2 on configuration errors, 3 on numerical failures.
inline int run_command(const std::vector<std::string>& args, std::ostream& out = std::cout,
                       std::ostream& err = std::cerr) {
    CLI::App app{"Band structure of the three-beam honeycomb optical lattice"};
    app.require_subcommand(1, 1);

    struct Flags {
        std::string config_path, out_path, units;
        std::optional<double> depth, hbar_e, s1, s2, s3, theta2, theta3, phase;
        std::optional<std::string> detuning;
        std::optional<unsigned> threads;
        // command specific
        std::optional<std::string> path;
        std::optional<int> n, cutoff, samples, nx, ny, grid, bins, steps, probes;
        std::vector<double> gamma, v0_list, hbar_list, bracket;
        std::optional<double> epsilon, phi_max, rel_tol;
    } f;

    std::map<std::string, CLI::App*> subs;
    for (const auto& name : commands()) {
        CLI::App* s = app.add_subcommand(name);
        subs[name] = s;
        s->add_option("--config", f.config_path, "JSON configuration file");
        s->add_option("--out", f.out_path, "CSV output path; metadata goes to <out>.json");
        s->add_option("--units", f.units, "energy units of the output: er or v0");
        s->add_option("--threads", f.threads, "worker threads (default HONEYCOMB_THREADS or hardware)");
        if (name != "t0") s->add_option("--v0", f.depth, "lattice depth V0/E_R");
        if (name != "sweep-eta" && name != "sweep-theta") s->add_option("--hbar-e", f.hbar_e, "sqrt(2 E_R / V0)");
        s->add_option("--s1", f.s1);
        s->add_option("--s2", f.s2);
        s->add_option("--s3", f.s3);
        s->add_option("--theta2", f.theta2, "rotation of beam 2 (rad)");
        s->add_option("--theta3", f.theta3, "rotation of beam 3 (rad)");
        s->add_option("--phase", f.phase, "phase of the incoherent variant (rad)");
        s->add_option("--detuning", f.detuning, "blue or red");
    }
    subs["pot"]->add_option("--nx", f.nx);
    subs["pot"]->add_option("--ny", f.ny);
    for (const char* name : {"bands", "tb-bands"}) {
        subs[name]->add_option("--path", f.path, "k-path preset: G-K-M-G or K2-Kp3");
        subs[name]->add_option("--samples", f.samples, "samples per path segment");
    }
    subs["bands"]->add_option("--n", f.n, "number of bands (1..8)");
    subs["bands"]->add_option("--cutoff", f.cutoff, "plane-wave cutoff N");
    subs["tb-bands"]->add_option("--epsilon", f.epsilon);
    subs["dirac"]->add_option("--gamma", f.gamma, "t1 / t0 values");
    subs["dos"]->add_option("--grid", f.grid);
    subs["dos"]->add_option("--bins", f.bins);
    subs["t0"]->add_option("--v0", f.v0_list, "lattice depths V0/E_R");
    subs["t0"]->add_option("--cutoff", f.cutoff);
    for (const char* name : {"sweep-eta", "sweep-theta"}) {
        subs[name]->add_option("--hbar-e", f.hbar_list, "hbar_e values");
        subs[name]->add_option("--bracket", f.bracket, "initial bracket lo hi")->expected(2);
        subs[name]->add_option("--probes", f.probes);
        subs[name]->add_option("--rel-tol", f.rel_tol);
        subs[name]->add_option("--cutoff", f.cutoff);
    }
    subs["phase-scan"]->add_option("--phi-max", f.phi_max);
    subs["phase-scan"]->add_option("--steps", f.steps);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return 0;
        }
        err << error_json("config_error", e.what(), 2).dump() << "\n";
        return 2;
    }

    std::string command;
    for (const auto& [name, s] : subs)
        if (s->parsed()) command = name;

    try {
        json cfg = default_config();
        if (!f.config_path.empty()) {
            std::ifstream in(f.config_path);
            if (!in) throw ConfigError("cannot read config file " + f.config_path);
            json file;
            try {
                file = json::parse(in);
            } catch (const json::parse_error& e) {
                throw ConfigError(std::string("config is not valid JSON: ") + e.what());
            }
            merge_strict(cfg, file);
        }

        json& beam = cfg["beam"];
        if (f.depth && f.hbar_e) throw ConfigError("give either --v0 or --hbar-e, not both");
        if (f.depth) beam["depth"] = *f.depth;
        if (f.hbar_e) {
            if (!(*f.hbar_e > 0.0)) throw ConfigError("hbar_e must be positive");
            beam["depth"] = 2.0 / (*f.hbar_e * *f.hbar_e);
        }
        if (f.s1) beam["strengths"][0] = *f.s1;
        if (f.s2) beam["strengths"][1] = *f.s2;
        if (f.s3) beam["strengths"][2] = *f.s3;
        if (f.theta2) beam["theta2"] = *f.theta2;
        if (f.theta3) beam["theta3"] = *f.theta3;
        if (f.phase) beam["phase"] = *f.phase;
        if (f.detuning) beam["detuning"] = *f.detuning;
        if (!f.units.empty()) cfg["units"] = f.units;
        if (f.nx) cfg["pot"]["nx"] = *f.nx;
        if (f.ny) cfg["pot"]["ny"] = *f.ny;
        if (command == "bands" || command == "tb-bands") {
            if (f.path) cfg[command]["path"] = *f.path;
            if (f.samples) cfg[command]["samples_per_segment"] = *f.samples;
        }
        if (f.n) cfg["bands"]["n"] = *f.n;
        if (f.cutoff) {
            const char* sec = command == "t0" ? "t0" : (command == "bands" ? "bands" : "sweep");
            cfg[sec]["cutoff"] = *f.cutoff;
        }
        if (f.epsilon) cfg["tb-bands"]["epsilon"] = *f.epsilon;
        if (!f.gamma.empty()) cfg["dirac"]["gamma"] = f.gamma;
        if (f.grid) cfg["dos"]["grid"] = *f.grid;
        if (f.bins) cfg["dos"]["bins"] = *f.bins;
        if (!f.v0_list.empty()) cfg["t0"]["v0"] = f.v0_list;
        if (!f.hbar_list.empty()) cfg["sweep"]["hbar_e"] = f.hbar_list;
        if (!f.bracket.empty()) cfg["sweep"]["bracket"] = f.bracket;
        if (f.probes) cfg["sweep"]["probes"] = *f.probes;
        if (f.rel_tol) cfg["sweep"]["rel_tol"] = *f.rel_tol;
        if (f.phi_max) cfg["phase-scan"]["phi_max"] = *f.phi_max;
        if (f.steps) cfg["phase-scan"]["steps"] = *f.steps;

        Context ctx;
        ctx.config = cfg;
        ctx.beam = beam_from_json(cfg.at("beam"));
        const auto units = get<std::string>(cfg, "units");
        if (units == "v0")
            ctx.unit_scale = 1.0 / ctx.beam.depth;
        else if (units != "er")
            throw ConfigError("units must be 'er' or 'v0'");
        ctx.threads = f.threads.value_or(default_thread_count());
        if (ctx.threads == 0) throw ConfigError("--threads must be positive");

        Output result;
        if (command == "geom") result = cmd_geom(ctx);
        else if (command == "pot") result = cmd_pot(ctx);
        else if (command == "minima") result = cmd_minima(ctx);
        else if (command == "bands") result = cmd_bands(ctx);
        else if (command == "tb-bands") result = cmd_tb_bands(ctx);
        else if (command == "dirac") result = cmd_dirac(ctx);
        else if (command == "dos") result = cmd_dos(ctx);
        else if (command == "t0") result = cmd_t0(ctx);
        else if (command == "sweep-eta") result = cmd_sweep(ctx, Distortion::strength);
        else if (command == "sweep-theta") result = cmd_sweep(ctx, Distortion::angle);
        else result = cmd_phase_scan(ctx);

        json meta = json::object();
        meta["command"] = command;
        meta["config"] = cfg;
        meta["hbar_e"] = ctx.beam.hbar_e();
        meta["energy_units"] = units == "v0" ? "V0" : "E_R";
        if (ctx.beam.detuning == Detuning::red) meta["regime"] = "triangular (red detuning)";
        if (command == "t0")
            meta["notes"] = {"trap length zeta uses sqrt(2|t0| / (m Omega^2)) so that it is a length"};
        for (auto& [k, v] : result.meta.items()) meta[k] = v;

        for (const auto& m : result.messages) err << m << "\n";
        if (f.out_path.empty()) {
            out << "# " << meta.dump() << "\n" << result.csv;
        } else {
            const std::string suffix = ".tmp";
            const std::filesystem::path csv_path = f.out_path;
            const std::filesystem::path meta_path = f.out_path + ".json";
            write_atomic(meta_path, suffix, meta.dump(2) + "\n");
            try {
                write_atomic(csv_path, suffix, result.csv);
            } catch (...) {
                std::error_code ec;
                std::filesystem::remove(meta_path, ec);
                throw;
            }
        }
        return 0;
    } catch (const ConfigError& e) {
        err << error_json("config_error", e.what(), 2).dump() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        json j = error_json(e.kind(), e.what(), 3);
        if (const auto* ef = dynamic_cast<const EigensolverFailure*>(&e)) j["k"] = {ef->kx(), ef->ky()};
        if (const auto* cf = dynamic_cast<const ConvergenceFailure*>(&e)) j["drift"] = cf->drift();
        err << j.dump() << "\n";
        return 3;
    } catch (const std::filesystem::filesystem_error& e) {
        err << error_json("config_error", e.what(), 2).dump() << "\n";
        return 2;
    }
}

}  // namespace honeycomb::cli
