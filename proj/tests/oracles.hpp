#pragma once

// Slow, direct re-implementations used as test oracles. Nothing here calls
// into the library's numeric kernels.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "warpforge/amoe.hpp"
#include "warpforge/homography.hpp"
#include "warpforge/imaging.hpp"
#include "warpforge/objective.hpp"

namespace oracle {

using warpforge::FlowField;
using warpforge::Image;
using warpforge::Mask;
using warpforge::Point;

// Cox-de Boor recursion on the integer knot vector 0, 1, 2, ...
inline double cox_de_boor(int i, int k, double x) {
    if (k == 0) return (x >= i && x < i + 1) ? 1.0 : 0.0;
    const double a = (x - i) / k * cox_de_boor(i, k - 1, x);
    const double b = (i + k + 1 - x) / k * cox_de_boor(i + 1, k - 1, x);
    return a + b;
}

// Weights of the four cubic pieces active on the cell [3, 4) at local t.
inline std::array<double, 4> cubic_weights(double t) {
    return {cox_de_boor(0, 3, 3 + t), cox_de_boor(1, 3, 3 + t), cox_de_boor(2, 3, 3 + t),
            cox_de_boor(3, 3, 3 + t)};
}

// Interpolating thin-plate spline solved in raw pixel coordinates with a
// full-pivot LU. Returns displacement at p.
struct Tps {
    std::vector<Point> src;
    Eigen::MatrixXd coef;  // (n + 3) x 2

    Tps(const std::vector<Point>& source, const std::vector<Point>& offsets) : src(source) {
        const int n = static_cast<int>(src.size());
        Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n + 3, n + 3);
        Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n + 3, 2);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) L(i, j) = kernel(src[i], src[j]);
            L(i, n) = L(n, i) = 1.0;
            L(i, n + 1) = L(n + 1, i) = src[i].x;
            L(i, n + 2) = L(n + 2, i) = src[i].y;
            rhs(i, 0) = offsets[i].x;
            rhs(i, 1) = offsets[i].y;
        }
        coef = L.fullPivLu().solve(rhs);
    }

    static double kernel(Point a, Point b) {
        const double r2 = (a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y);
        return r2 > 0 ? r2 * std::log(r2) : 0.0;
    }

    Point at(Point p) const {
        const int n = static_cast<int>(src.size());
        double dx = coef(n, 0) + coef(n + 1, 0) * p.x + coef(n + 2, 0) * p.y;
        double dy = coef(n, 1) + coef(n + 1, 1) * p.x + coef(n + 2, 1) * p.y;
        for (int k = 0; k < n; ++k) {
            const double u = kernel(p, src[k]);
            dx += coef(k, 0) * u;
            dy += coef(k, 1) * u;
        }
        return {dx, dy};
    }
};

// Cubic B-spline restore, one pixel at a time, with the lattice extended by
// linear extrapolation.
inline FlowField ffd(const FlowField& lat, int W, int H) {
    auto node = [&](const std::vector<double>& v, int r, int c) {
        auto get = [&](int rr, int cc) { return v[static_cast<std::size_t>(rr) * lat.width + cc]; };
        auto row = [&](int rr, int cc) {
            if (cc < 0) return 2 * get(rr, 0) - get(rr, 1);
            if (cc >= lat.width) return 2 * get(rr, lat.width - 1) - get(rr, lat.width - 2);
            return get(rr, cc);
        };
        if (r < 0) return 2 * row(0, c) - row(1, c);
        if (r >= lat.height) return 2 * row(lat.height - 1, c) - row(lat.height - 2, c);
        return row(r, c);
    };
    FlowField out(H, W);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            const double gu = W > 1 ? x * (lat.width - 1.0) / (W - 1.0) : 0.0;
            const double gv = H > 1 ? y * (lat.height - 1.0) / (H - 1.0) : 0.0;
            int cu = std::min(static_cast<int>(gu), lat.width - 2);
            int cv = std::min(static_cast<int>(gv), lat.height - 2);
            const auto wu = cubic_weights(std::min(gu - cu, 1.0 - 1e-15));
            const auto wv = cubic_weights(std::min(gv - cv, 1.0 - 1e-15));
            double ax = 0, ay = 0;
            for (int b = 0; b < 4; ++b)
                for (int a = 0; a < 4; ++a) {
                    ax += wv[b] * wu[a] * node(lat.dx, cv + b - 1, cu + a - 1);
                    ay += wv[b] * wu[a] * node(lat.dy, cv + b - 1, cu + a - 1);
                }
            out.dx[out.index(y, x)] = ax;
            out.dy[out.index(y, x)] = ay;
        }
    return out;
}

inline double bilinear(const Image& img, double x, double y, int c) {
    if (x < 0 || y < 0 || x > img.width - 1 || y > img.height - 1) return 0.0;
    const int x0 = std::min(static_cast<int>(x), img.width - 1);
    const int y0 = std::min(static_cast<int>(y), img.height - 1);
    const int x1 = std::min(x0 + 1, img.width - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double fx = x - x0, fy = y - y0;
    return (1 - fy) * ((1 - fx) * img.at(y0, x0, c) + fx * img.at(y0, x1, c)) +
           fy * ((1 - fx) * img.at(y1, x0, c) + fx * img.at(y1, x1, c));
}

inline bool inside(const Image& img, double x, double y) {
    return x >= 0 && y >= 0 && x <= img.width - 1 && y <= img.height - 1;
}

// Masked L1 averaged over every pixel and channel.
inline double masked_l1(const Image& a, const Image& b, const FlowField& fa, const FlowField& fb, Point o = {}) {
    double s = 0;
    for (int y = 0; y < fa.height; ++y)
        for (int x = 0; x < fa.width; ++x) {
            const std::size_t i = fa.index(y, x);
            const double ax = x + o.x + fa.dx[i], ay = y + o.y + fa.dy[i];
            const double bx = x + o.x + fb.dx[i], by = y + o.y + fb.dy[i];
            if (!inside(a, ax, ay) || !inside(b, bx, by)) continue;
            for (int c = 0; c < a.channels; ++c) s += std::abs(bilinear(a, ax, ay, c) - bilinear(b, bx, by, c));
        }
    return s / (static_cast<double>(fa.height) * fa.width * a.channels);
}

inline double relu(double v) { return v > 0 ? v : 0; }

inline double intra(const warpforge::MeshVertices& m, const warpforge::LossConfig& cfg) {
    const bool prose = cfg.intra_mode == warpforge::IntraMode::Prose;
    const double tw = cfg.alpha * m.width / m.V, th = cfg.alpha * m.height / m.U;
    double sh = 0, sv = 0;
    for (int i = 0; i <= m.U; ++i)
        for (int j = 0; j < m.V; ++j) {
            const double e = std::abs(m.at(i, j + 1).x - m.at(i, j).x);
            sh += prose ? relu(tw - e) : relu(e - tw);
        }
    for (int i = 0; i < m.U; ++i)
        for (int j = 0; j <= m.V; ++j) {
            const double e = std::abs(m.at(i + 1, j).y - m.at(i, j).y);
            sv += prose ? relu(th - e) : relu(e - th);
        }
    return sh / ((m.U + 1) * m.V) + sv / (m.U * (m.V + 1));
}

inline double one_minus_cos(Point a, Point b) {
    const double na = std::hypot(a.x, a.y), nb = std::hypot(b.x, b.y);
    if (na == 0 || nb == 0) return 0;
    return 1 - (a.x * b.x + a.y * b.y) / (na * nb);
}

inline double inter(const warpforge::MeshVertices& m) {
    auto sub = [](Point a, Point b) { return Point{a.x - b.x, a.y - b.y}; };
    // eps_w(i, j): row i, edges j and j + 1; eps_h(i, j): column j, edges i and i + 1
    auto ew = [&](int i, int j) {
        return one_minus_cos(sub(m.at(i, j + 1), m.at(i, j)), sub(m.at(i, j + 2), m.at(i, j + 1)));
    };
    auto eh = [&](int i, int j) {
        return one_minus_cos(sub(m.at(i + 1, j), m.at(i, j)), sub(m.at(i + 2, j), m.at(i + 1, j)));
    };
    double sw = 0, sh = 0;
    for (int i = 0; i < m.U; ++i)
        for (int j = 0; j + 1 < m.V; ++j) sw += ew(i, j) + ew(i + 1, j);
    for (int i = 0; i + 1 < m.U; ++i)
        for (int j = 0; j < m.V; ++j) sh += eh(i, j) + eh(i, j + 1);
    return sw / (m.U * (m.V - 1)) + sh / ((m.U - 1) * m.V);
}

inline double psnr(const Image& a, const Image& b, const Mask& m) {
    double s = 0, n = 0;
    for (int y = 0; y < a.height; ++y)
        for (int x = 0; x < a.width; ++x) {
            if (m.at(y, x) == 0) continue;
            double e = 0;
            for (int c = 0; c < a.channels; ++c) e += std::pow(a.at(y, x, c) - b.at(y, x, c), 2);
            s += e / a.channels;
            n += 1;
        }
    return 20 * std::log10(1 / std::sqrt(s / n));
}

// Unmasked 7x7 box SSIM on the channel mean, valid windows only.
inline double ssim(const Image& a, const Image& b) {
    auto gray = [](const Image& img, int y, int x) {
        double s = 0;
        for (int c = 0; c < img.channels; ++c) s += img.at(y, x, c);
        return s / img.channels;
    };
    const double C1 = 1e-4, C2 = 9e-4;
    double total = 0;
    int count = 0;
    for (int y = 3; y + 3 < a.height; ++y)
        for (int x = 3; x + 3 < a.width; ++x) {
            double ma = 0, mb = 0;
            for (int dy = -3; dy <= 3; ++dy)
                for (int dx = -3; dx <= 3; ++dx) {
                    ma += gray(a, y + dy, x + dx);
                    mb += gray(b, y + dy, x + dx);
                }
            ma /= 49;
            mb /= 49;
            double va = 0, vb = 0, cov = 0;
            for (int dy = -3; dy <= 3; ++dy)
                for (int dx = -3; dx <= 3; ++dx) {
                    const double da = gray(a, y + dy, x + dx) - ma, db = gray(b, y + dy, x + dx) - mb;
                    va += da * da;
                    vb += db * db;
                    cov += da * db;
                }
            va /= 49;
            vb /= 49;
            cov /= 49;
            total += (2 * ma * mb + C1) * (2 * cov + C2) / ((ma * ma + mb * mb + C1) * (va + vb + C2));
            ++count;
        }
    return total / count;
}

inline double reg(std::array<double, 3> w, double lambda) {
    double v = 0, e = 0;
    for (double x : w) {
        v += (x - 1.0 / 3) * (x - 1.0 / 3);
        if (x > 0) e += x * std::log(x);
    }
    return v + lambda * e;
}

// Expert r on one cell, written out element by element.
inline std::vector<double> expert(const Eigen::MatrixXd& W, const Eigen::VectorXd& b, const std::vector<double>& x,
                                  const std::vector<double>& residual) {
    std::vector<double> out(residual.size());
    for (std::size_t o = 0; o < out.size(); ++o) {
        double a = b(static_cast<Eigen::Index>(o));
        for (std::size_t k = 0; k < x.size(); ++k) a += W(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(k)) * x[k];
        out[o] = residual[o] + std::tanh(a);
    }
    return out;
}

inline warpforge::FeatureMap fuse(const warpforge::ExpertParams& e, std::array<double, 3> w,
                                  const warpforge::FeatureMap& fs, const warpforge::FeatureMap& fg) {
    const int c = fs.channels;
    warpforge::FeatureMap out(c, fs.grid_h, fs.grid_w);
    for (int y = 0; y < fs.grid_h; ++y)
        for (int x = 0; x < fs.grid_w; ++x) {
            std::vector<double> s(c), g(c), cat(2 * c), mid(c);
            for (int k = 0; k < c; ++k) {
                s[k] = fs.at(k, y, x);
                g[k] = fg.at(k, y, x);
                cat[k] = s[k];
                cat[c + k] = g[k];
                mid[k] = 0.5 * (s[k] + g[k]);
            }
            const auto es = expert(e.w_s, e.b_s, s, s);
            const auto eg = expert(e.w_g, e.b_g, g, g);
            const auto eh = expert(e.w_h, e.b_h, cat, mid);
            for (int k = 0; k < c; ++k) out.at(k, y, x) = w[0] * es[k] + w[1] * eg[k] + w[2] * eh[k];
        }
    return out;
}

// Central difference of f along one coordinate.
inline double central(const std::function<double(double)>& f, double x0, double h) {
    return (f(x0 + h) - f(x0 - h)) / (2 * h);
}

inline double rel_err(double a, double b, double floor = 1e-8) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace oracle
