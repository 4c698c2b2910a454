#pragma once

#include <cstdint>
#include <vector>

#include "warpforge/feature_map.hpp"
#include "warpforge/homography.hpp"

namespace warpforge {

/// Sparse keypoints with optional d-dimensional descriptors.
struct KeypointSet {
    std::vector<Point> points;
    std::vector<std::vector<double>> descriptors;  // empty, or one per point
    int frame_w = 0;
    int frame_h = 0;

    int descriptor_dim() const { return descriptors.empty() ? 0 : static_cast<int>(descriptors.front().size()); }
    void validate() const;
};

struct PointFeatureSet {
    int channels = 0;
    std::vector<std::vector<double>> features;
    std::vector<Point> coords;
};

/// Deterministic stand-in for a learned point encoder: a seeded affine
/// projection of [x/W, y/H, descriptor...] followed by tanh.
PointFeatureSet encode_points(const KeypointSet& kp, int channels, std::uint64_t seed);

enum class Pooling { Max, Mean, Sum };

/// Floor-quantizes points into a floor(H*scale) x floor(W*scale) grid and
/// pools features per cell; empty cells stay zero. Points in the partial
/// strip past the last whole cell join the last cell. Mean/sum pool the
/// per-channel values in sorted order so the result is order independent.
FeatureMap rasterize(const PointFeatureSet& pf, double scale, int frame_w, int frame_h,
                     Pooling pooling = Pooling::Max);

}  // namespace warpforge
