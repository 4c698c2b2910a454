#include "warpforge/synthetic.hpp"

#include <cmath>
#include <numbers>

#include "warpforge/error.hpp"

namespace warpforge {

namespace {

constexpr int kModes = 3;

Point raw_residual(const SyntheticWarp& w, Point p) {
    const double tau = 2.0 * std::numbers::pi;
    Point r;
    for (const auto& m : w.modes) {
        const double u = tau * m.fx * p.x / w.frame_w;
        const double v = tau * m.fy * p.y / w.frame_h;
        r.x += m.weight_x * std::sin(u + m.phase_a) * std::cos(v + m.phase_b);
        r.y += m.weight_y * std::cos(u + m.phase_b) * std::sin(v + m.phase_a);
    }
    return r;
}

}  // namespace

Point SyntheticWarp::residual(Point p) const {
    if (residual_scale == 0.0) return {};
    const Point r = raw_residual(*this, p);
    return {r.x * residual_scale, r.y * residual_scale};
}

Point SyntheticWarp::map(Point p) const {
    const auto h = homography.map(p);
    if (!h) throw NumericalFailure("synthetic warp maps a point to infinity");
    const Point r = residual(p);
    return {h->x + r.x, h->y + r.y};
}

ControlGrid SyntheticWarp::control_grid(int U, int V) const {
    ControlGrid g = ControlGrid::uniform(U, V, frame_w, frame_h);
    for (std::size_t k = 0; k < g.count(); ++k) {
        const Point m = map(g.source[k]);
        g.offsets[k] = {m.x - g.source[k].x, m.y - g.source[k].y};
    }
    return g;
}

SyntheticWarp make_synthetic_warp(std::uint64_t seed, int frame_w, int frame_h, double homography_fraction,
                                  double residual_fraction) {
    std::mt19937_64 rng(seed);
    SyntheticWarp w;
    w.frame_w = frame_w;
    w.frame_h = frame_h;
    w.corners.frame_w = frame_w;
    w.corners.frame_h = frame_h;
    for (auto& o : w.corners.offsets) {
        o.x = uniform(rng, -1.0, 1.0) * homography_fraction * frame_w;
        o.y = uniform(rng, -1.0, 1.0) * homography_fraction * frame_h;
    }
    w.homography = offsets_to_homography(w.corners);
    for (int k = 0; k < kModes; ++k) {
        SyntheticWarp::Mode m{};
        m.fx = uniform(rng, 0.3, 1.0);
        m.fy = uniform(rng, 0.3, 1.0);
        m.phase_a = uniform(rng, 0.0, 2.0 * std::numbers::pi);
        m.phase_b = uniform(rng, 0.0, 2.0 * std::numbers::pi);
        m.weight_x = uniform(rng, 0.5, 1.0);
        m.weight_y = uniform(rng, 0.5, 1.0);
        w.modes.push_back(m);
    }
    if (residual_fraction > 0.0) {
        // normalize the peak residual over a dense sample of the frame
        double peak = 0.0;
        constexpr int kProbe = 64;
        for (int i = 0; i <= kProbe; ++i)
            for (int j = 0; j <= kProbe; ++j) {
                const Point p{(frame_w - 1.0) * j / kProbe, (frame_h - 1.0) * i / kProbe};
                const Point r = raw_residual(w, p);
                peak = std::max(peak, std::hypot(r.x, r.y));
            }
        const double diag = std::hypot(frame_w, frame_h);
        w.residual_scale = peak > 0.0 ? residual_fraction * diag / peak : 0.0;
        w.residual_peak = residual_fraction * diag;
    }
    return w;
}

}  // namespace warpforge
