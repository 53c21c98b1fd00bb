#pragma once

#include <string>
#include <utility>
#include <vector>

#include "honeycomb/errors.hpp"
#include "honeycomb/geometry.hpp"

/// Named k-space paths with linear interpolation between corners.
namespace honeycomb {

struct KPath {
    std::vector<Vec2> k;
    std::vector<double> s;  ///< cumulative arc length
    std::vector<std::pair<std::string, double>> labels;
};

inline KPath interpolate_path(const std::vector<std::pair<std::string, Vec2>>& corners, int per_segment) {
    if (corners.size() < 2) throw ConfigError("a k-path needs at least two corners");
    if (per_segment < 1) throw ConfigError("samples per segment must be positive");
    KPath p;
    double s0 = 0.0;
    p.labels.emplace_back(corners[0].first, 0.0);
    for (std::size_t c = 0; c + 1 < corners.size(); ++c) {
        const Vec2 from = corners[c].second, to = corners[c + 1].second;
        const double len = (to - from).norm();
        for (int i = 0; i < per_segment; ++i) {
            const double t = static_cast<double>(i) / per_segment;
            p.k.push_back(from + t * (to - from));
            p.s.push_back(s0 + t * len);
        }
        s0 += len;
        p.labels.emplace_back(corners[c + 1].first, s0);
    }
    p.k.push_back(corners.back().second);
    p.s.push_back(s0);
    return p;
}

/// Gamma -> K -> M -> Gamma, with M = b2/2 the midpoint of the edge through K.
/// "K2-Kp3" is the vertical zone edge at k_x = (b1 + b2)_x / 2 from the corner
/// k3 below the axis to the corner -k2 above it (x = sqrt3/2, y from -1/2 to 1/2
/// when undistorted).
inline KPath k_path(const std::string& name, const LatticeVectors& g, int per_segment) {
    if (name == "G-K-M-G")
        return interpolate_path({{"G", Vec2::Zero()}, {"K", g.K}, {"M", g.b2 / 2.0}, {"G", Vec2::Zero()}},
                                per_segment);
    if (name == "K2-Kp3") return interpolate_path({{"K2", g.k[2]}, {"Kp3", -g.k[1]}}, per_segment);
    throw ConfigError("unknown k-path preset '" + name + "' (expected G-K-M-G or K2-Kp3)");
}

}  // namespace honeycomb
