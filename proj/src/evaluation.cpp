#include "warpforge/evaluation.hpp"

#include <cmath>
#include <sstream>

#include "warpforge/error.hpp"

namespace warpforge {

namespace {

constexpr int kRadius = 3;  // 7x7 window
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

void check_dims(const Image& a, const Image& b, const Mask& m, const char* what) {
    a.validate();
    b.validate();
    if (a.height != b.height || a.width != b.width || a.channels != b.channels)
        throw ContractViolation(std::string(what) + ": images differ in size");
    if (m.height != a.height || m.width != a.width)
        throw ContractViolation(std::string(what) + ": mask size differs from the images");
}

}  // namespace

PsnrResult mpsnr(const Image& a, const Image& b, const Mask& overlap) {
    check_dims(a, b, overlap, "mpsnr");
    std::vector<double> rows(a.height, 0.0);
    std::size_t count = 0;
    for (int y = 0; y < a.height; ++y) {
        double acc = 0.0;
        for (int x = 0; x < a.width; ++x) {
            const double m = overlap.at(y, x);
            if (m == 0.0) continue;
            double e = 0.0;
            for (int c = 0; c < a.channels; ++c) {
                const double d = a.at(y, x, c) - b.at(y, x, c);
                e += d * d;
            }
            acc += m * e / a.channels;
            ++count;
        }
        rows[y] = acc;
    }
    if (count == 0) throw UndefinedMetric("mpsnr: overlap mask is empty");
    double weight = 0.0;
    for (double m : overlap.data) weight += m;
    PsnrResult r;
    r.overlap_pixels = count;
    r.mrmse = std::sqrt(pairwise_sum(rows) / weight);
    r.mpsnr = r.mrmse > 0.0 ? 20.0 * std::log10(1.0 / r.mrmse) : std::numeric_limits<double>::infinity();
    return r;
}

double mssim(const Image& a, const Image& b, const Mask& overlap, Exec exec) {
    check_dims(a, b, overlap, "mssim");
    const int h = a.height;
    const int w = a.width;
    const Image ga = to_gray(a);
    const Image gb = to_gray(b);
    std::vector<double> row_sum(h, 0.0);
    std::vector<std::size_t> row_count(h, 0);
    const double n = (2 * kRadius + 1) * (2 * kRadius + 1);
#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
    for (int y = kRadius; y < h - kRadius; ++y) {
        for (int x = kRadius; x < w - kRadius; ++x) {
            bool inside = true;
            for (int dy = -kRadius; dy <= kRadius && inside; ++dy)
                for (int dx = -kRadius; dx <= kRadius; ++dx)
                    if (overlap.at(y + dy, x + dx) == 0.0) {
                        inside = false;
                        break;
                    }
            if (!inside) continue;
            double sa = 0.0, sb = 0.0;
            for (int dy = -kRadius; dy <= kRadius; ++dy)
                for (int dx = -kRadius; dx <= kRadius; ++dx) {
                    sa += ga.at(y + dy, x + dx);
                    sb += gb.at(y + dy, x + dx);
                }
            const double ma = sa / n;
            const double mb = sb / n;
            double vaa = 0.0, vbb = 0.0, vab = 0.0;
            for (int dy = -kRadius; dy <= kRadius; ++dy)
                for (int dx = -kRadius; dx <= kRadius; ++dx) {
                    const double da = ga.at(y + dy, x + dx) - ma;
                    const double db = gb.at(y + dy, x + dx) - mb;
                    vaa += da * da;
                    vbb += db * db;
                    vab += da * db;
                }
            vaa /= n;
            vbb /= n;
            vab /= n;
            const double s = ((2.0 * ma * mb + kC1) * (2.0 * vab + kC2)) /
                             ((ma * ma + mb * mb + kC1) * (vaa + vbb + kC2));
            row_sum[y] += s;
            ++row_count[y];
        }
    }
    std::size_t count = 0;
    for (std::size_t c : row_count) count += c;
    if (count == 0) throw UndefinedMetric("mssim: overlap has no full 7x7 window");
    return pairwise_sum(row_sum) / static_cast<double>(count);
}

MetricReport evaluate_pair(const Image& a, const Image& b, const Mask& overlap, Exec exec) {
    const Mask m = threshold_mask(overlap);
    const PsnrResult p = mpsnr(a, b, m);
    MetricReport r;
    r.mpsnr = p.mpsnr;
    r.mrmse = p.mrmse;
    r.overlap_pixels = p.overlap_pixels;
    r.mssim = mssim(a, b, m, exec);
    return r;
}

std::string format_db(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream s;
    s.precision(10);
    s << v;
    return s.str();
}

std::string MetricReport::to_text() const {
    std::ostringstream s;
    s.precision(10);
    s << "mpsnr=" << format_db(mpsnr) << "\nmssim=" << mssim << "\nmrmse=" << mrmse
      << "\noverlap_pixels=" << overlap_pixels << '\n';
    return s.str();
}

std::string MetricReport::csv_row() const {
    std::ostringstream s;
    s.precision(10);
    s << format_db(mpsnr) << ',' << mssim << ',' << mrmse << ',' << overlap_pixels;
    return s.str();
}

}  // namespace warpforge
