#pragma once

#include <limits>
#include <string>

#include "warpforge/imaging.hpp"

namespace warpforge {

struct PsnrResult {
    double mpsnr = 0.0;  // +inf when mrmse is 0
    double mrmse = 0.0;
    std::size_t overlap_pixels = 0;
};

/// Masked PSNR over pixels with mask != 0. Per-pixel error is the mean over
/// channels of the squared difference. Throws UndefinedMetric on an empty mask.
PsnrResult mpsnr(const Image& a, const Image& b, const Mask& overlap);

/// Masked SSIM: 7x7 box window, population statistics, C1 = 0.01^2,
/// C2 = 0.03^2, computed on the channel mean. Averages the SSIM map over
/// pixels whose whole window lies inside the image and inside the mask.
/// Throws UndefinedMetric when no such pixel exists.
double mssim(const Image& a, const Image& b, const Mask& overlap, Exec exec = Exec::Parallel);

struct MetricReport {
    double mpsnr = 0.0;
    double mssim = 0.0;
    double mrmse = 0.0;
    std::size_t overlap_pixels = 0;

    /// key=value lines.
    std::string to_text() const;
    static std::string csv_header() { return "mpsnr,mssim,mrmse,overlap_pixels"; }
    std::string csv_row() const;
};

/// Both metrics on one overlap mask (binarized at 0.999 first).
MetricReport evaluate_pair(const Image& a, const Image& b, const Mask& overlap, Exec exec = Exec::Parallel);

/// Formats a dB value, writing "inf" for the identical-image sentinel.
std::string format_db(double v);

}  // namespace warpforge
