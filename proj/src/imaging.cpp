#include "warpforge/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "warpforge/error.hpp"

namespace warpforge {

Image::Image(int h, int w, int c, double fill)
    : height(h), width(w), channels(c),
      data(static_cast<std::size_t>(h) * w * c, fill) {
    validate();
}

void Image::validate() const {
    if (height < 0 || width < 0) throw ContractViolation("image: negative dimensions");
    if (channels != 1 && channels != 3)
        throw ContractViolation("image: channels must be 1 or 3, got " + std::to_string(channels));
    if (data.size() != pixel_count() * channels)
        throw ContractViolation("image: data length does not match height*width*channels");
}

Mask::Mask(int h, int w, double fill) : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}

std::size_t Mask::count_nonzero() const {
    return static_cast<std::size_t>(std::count_if(data.begin(), data.end(), [](double v) { return v != 0.0; }));
}

FlowField::FlowField(int h, int w)
    : height(h), width(w), dx(static_cast<std::size_t>(h) * w, 0.0), dy(static_cast<std::size_t>(h) * w, 0.0) {}

void FlowField::validate() const {
    const std::size_t n = static_cast<std::size_t>(height) * width;
    if (dx.size() != n || dy.size() != n) throw ContractViolation("flow: dx/dy length mismatch");
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(dx[i]) || !std::isfinite(dy[i])) throw ContractViolation("flow: non-finite entry");
    }
}

namespace {

inline bool inside(const Image& img, double x, double y) {
    return x >= 0.0 && y >= 0.0 && x <= img.width - 1 && y <= img.height - 1;
}

}  // namespace

Sample bilinear_sample(const Image& img, double x, double y) {
    Sample s;
    if (img.width == 0 || img.height == 0 || !inside(img, x, y)) return s;
    s.in_bounds = true;
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const int x1 = std::min(x0 + 1, img.width - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    const double w00 = (1.0 - fx) * (1.0 - fy);
    const double w10 = fx * (1.0 - fy);
    const double w01 = (1.0 - fx) * fy;
    const double w11 = fx * fy;
    for (int c = 0; c < img.channels; ++c) {
        s.values[c] = w00 * img.at(y0, x0, c) + w10 * img.at(y0, x1, c) + w01 * img.at(y1, x0, c) +
                      w11 * img.at(y1, x1, c);
    }
    return s;
}

SampleWithGradient bilinear_sample_grad(const Image& img, double x, double y) {
    SampleWithGradient s;
    if (img.width < 2 || img.height < 2 || !inside(img, x, y)) return s;
    s.in_bounds = true;
    // left/top limit: cell [ceil(x)-1, ceil(x)]
    const int x0 = std::clamp(static_cast<int>(std::ceil(x)) - 1, 0, img.width - 2);
    const int y0 = std::clamp(static_cast<int>(std::ceil(y)) - 1, 0, img.height - 2);
    const double fx = x - x0;
    const double fy = y - y0;
    for (int c = 0; c < img.channels; ++c) {
        const double v00 = img.at(y0, x0, c);
        const double v10 = img.at(y0, x0 + 1, c);
        const double v01 = img.at(y0 + 1, x0, c);
        const double v11 = img.at(y0 + 1, x0 + 1, c);
        s.values[c] = (1.0 - fx) * (1.0 - fy) * v00 + fx * (1.0 - fy) * v10 + (1.0 - fx) * fy * v01 + fx * fy * v11;
        s.ddx[c] = (1.0 - fy) * (v10 - v00) + fy * (v11 - v01);
        s.ddy[c] = (1.0 - fx) * (v01 - v00) + fx * (v11 - v10);
    }
    return s;
}

Warped remap(const Image& img, const FlowField& flow, double origin_x, double origin_y, Exec exec) {
    img.validate();
    if (flow.dx.size() != static_cast<std::size_t>(flow.height) * flow.width ||
        flow.dy.size() != flow.dx.size())
        throw ContractViolation("remap: malformed flow");
    Warped out{Image(flow.height, flow.width, img.channels), Mask(flow.height, flow.width)};
    const int h = flow.height;
    const int w = flow.width;
    const int ch = img.channels;
#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = flow.index(y, x);
            const Sample s = bilinear_sample(img, x + origin_x + flow.dx[i], y + origin_y + flow.dy[i]);
            for (int c = 0; c < ch; ++c) out.image.data[i * ch + c] = s.values[c];
            out.mask.data[i] = s.in_bounds ? 1.0 : 0.0;
        }
    }
    return out;
}

Warped warp_with_flow(const Image& img, const FlowField& flow, Exec exec) {
    if (img.height != flow.height || img.width != flow.width)
        throw ContractViolation("warp_with_flow: image is " + std::to_string(img.height) + "x" +
                                std::to_string(img.width) + " but flow is " + std::to_string(flow.height) +
                                "x" + std::to_string(flow.width));
    return remap(img, flow, 0.0, 0.0, exec);
}

Mask overlap_mask(const Mask& m1, const Mask& m2) {
    if (m1.height != m2.height || m1.width != m2.width) throw ContractViolation("overlap_mask: dimension mismatch");
    Mask out(m1.height, m1.width);
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = m1.data[i] * m2.data[i];
    return out;
}

Mask threshold_mask(const Mask& m, double threshold) {
    Mask out(m.height, m.width);
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = m.data[i] >= threshold ? 1.0 : 0.0;
    return out;
}

Image average_fuse(const Image& a, const Mask& mask_a, const Image& b, const Mask& mask_b) {
    a.validate();
    b.validate();
    if (a.height != b.height || a.width != b.width || a.channels != b.channels || mask_a.height != a.height ||
        mask_a.width != a.width || mask_b.height != a.height || mask_b.width != a.width)
        throw ContractViolation("average_fuse: dimension mismatch");
    Image out(a.height, a.width, a.channels);
    const int ch = a.channels;
    for (std::size_t i = 0; i < a.pixel_count(); ++i) {
        const bool va = mask_a.data[i] > 0.0;
        const bool vb = mask_b.data[i] > 0.0;
        for (int c = 0; c < ch; ++c) {
            const std::size_t k = i * ch + c;
            if (va && vb)
                out.data[k] = (a.data[k] + b.data[k]) / 2.0;
            else if (va)
                out.data[k] = a.data[k];
            else if (vb)
                out.data[k] = b.data[k];
        }
    }
    return out;
}

Image to_gray(const Image& img) {
    if (img.channels == 1) return img;
    Image out(img.height, img.width, 1);
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        double s = 0.0;
        for (int c = 0; c < img.channels; ++c) s += img.data[i * img.channels + c];
        out.data[i] = s / img.channels;
    }
    return out;
}

Image gaussian_blur(const Image& img, double sigma) {
    if (sigma <= 0.0) return img;
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(2 * radius + 1);
    double total = 0.0;
    for (int k = -radius; k <= radius; ++k) {
        kernel[k + radius] = std::exp(-0.5 * k * k / (sigma * sigma));
        total += kernel[k + radius];
    }
    for (double& k : kernel) k /= total;

    Image tmp(img.height, img.width, img.channels);
    Image out(img.height, img.width, img.channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) {
                double s = 0.0;
                for (int k = -radius; k <= radius; ++k)
                    s += kernel[k + radius] * img.at(y, std::clamp(x + k, 0, img.width - 1), c);
                tmp.at(y, x, c) = s;
            }
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) {
                double s = 0.0;
                for (int k = -radius; k <= radius; ++k)
                    s += kernel[k + radius] * tmp.at(std::clamp(y + k, 0, img.height - 1), x, c);
                out.at(y, x, c) = s;
            }
    return out;
}

}  // namespace warpforge
