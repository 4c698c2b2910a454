#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "warpforge/homography.hpp"
#include "warpforge/tps_ffd.hpp"

namespace warpforge {

/// Uniform double in [0,1) from the top 53 bits of the generator. Used
/// instead of std::uniform_real_distribution so streams are portable.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
inline double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

/// Random fold-free warp: a 4-pt homography (corner offsets up to
/// homography_fraction of the frame dimensions) followed by a smooth residual
/// (low-frequency sinusoid modes) whose largest displacement is
/// residual_fraction of the frame diagonal.
struct SyntheticWarp {
    FourPtOffsets corners;
    Homography homography;
    int frame_w = 0;
    int frame_h = 0;
    double residual_peak = 0.0;
    struct Mode {
        double fx, fy, phase_a, phase_b, weight_x, weight_y;
    };
    std::vector<Mode> modes;
    double residual_scale = 0.0;

    /// Residual displacement at p (zero when residual_fraction was 0).
    Point residual(Point p) const;

    /// p -> homography(p) + residual(p).
    Point map(Point p) const;

    /// Control grid whose offsets reproduce map() at every vertex.
    ControlGrid control_grid(int U, int V) const;
};

SyntheticWarp make_synthetic_warp(std::uint64_t seed, int frame_w, int frame_h, double homography_fraction,
                                  double residual_fraction);

}  // namespace warpforge
