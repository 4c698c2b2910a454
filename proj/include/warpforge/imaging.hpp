#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "warpforge/parallel.hpp"

namespace warpforge {

/// Row-major raster with 1 or 3 interleaved channels, intensities in [0,1].
struct Image {
    int height = 0;
    int width = 0;
    int channels = 1;
    std::vector<double> data;

    Image() = default;
    Image(int h, int w, int c, double fill = 0.0);

    std::size_t pixel_count() const { return static_cast<std::size_t>(height) * width; }
    double& at(int y, int x, int c = 0) { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
    double at(int y, int x, int c = 0) const { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }

    /// Throws ContractViolation if the buffer size or channel count is off.
    void validate() const;
};

/// Validity raster in [0,1], same dimensions as the raster it masks.
struct Mask {
    int height = 0;
    int width = 0;
    std::vector<double> data;

    Mask() = default;
    Mask(int h, int w, double fill = 0.0);
    static Mask ones(int h, int w) { return Mask(h, w, 1.0); }

    double& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
    double at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
    std::size_t count_nonzero() const;
};

/// Per-pixel displacement, backward convention: output pixel p samples the
/// input at p + (dx, dy).
struct FlowField {
    int height = 0;
    int width = 0;
    std::vector<double> dx;
    std::vector<double> dy;

    FlowField() = default;
    FlowField(int h, int w);

    std::size_t index(int y, int x) const { return static_cast<std::size_t>(y) * width + x; }
    void validate() const;
};

struct Sample {
    std::array<double, 3> values{0.0, 0.0, 0.0};
    bool in_bounds = false;
};

/// Bilinear sample with value and spatial derivatives. Derivatives at integer
/// coordinates use the left/top cell (falling back to the right/bottom cell on
/// the first row/column).
struct SampleWithGradient {
    std::array<double, 3> values{0.0, 0.0, 0.0};
    std::array<double, 3> ddx{0.0, 0.0, 0.0};
    std::array<double, 3> ddy{0.0, 0.0, 0.0};
    bool in_bounds = false;
};

/// Bilinear interpolation of the 4 neighbours. Coordinates outside
/// [0,W-1]x[0,H-1] yield zeros and in_bounds = false.
Sample bilinear_sample(const Image& img, double x, double y);
SampleWithGradient bilinear_sample_grad(const Image& img, double x, double y);

struct Warped {
    Image image;
    Mask mask;
};

/// Backward warp; image and flow must share dimensions.
Warped warp_with_flow(const Image& img, const FlowField& flow, Exec exec = Exec::Parallel);

/// Backward warp onto a canvas of the flow's dimensions. Canvas pixel (x,y)
/// samples the input at (x + origin_x + dx, y + origin_y + dy).
Warped remap(const Image& img, const FlowField& flow, double origin_x, double origin_y,
             Exec exec = Exec::Parallel);

Mask overlap_mask(const Mask& m1, const Mask& m2);

/// Binary copy of a continuous mask: 1 where value >= threshold.
Mask threshold_mask(const Mask& m, double threshold = 0.999);

/// Both valid -> mean; one valid -> that image; neither -> 0.
Image average_fuse(const Image& a, const Mask& mask_a, const Image& b, const Mask& mask_b);

/// Channel mean as a single-channel image.
Image to_gray(const Image& img);

/// Separable Gaussian blur with edge clamping.
Image gaussian_blur(const Image& img, double sigma);

}  // namespace warpforge
