#include "warpforge/homography.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <limits>
#include <random>
#include <string>

#include "warpforge/error.hpp"

namespace warpforge {

namespace {

constexpr double kDetTolerance = 1e-10;
constexpr double kInfinityTolerance = 1e-12;
// Finite stand-in for points mapped to infinity; always lands out of bounds.
constexpr double kFarAway = 1e9;

Eigen::Matrix3d normalize(const Eigen::Matrix3d& h) {
    if (std::abs(h(2, 2)) > 1e-14 * h.norm()) return h / h(2, 2);
    return h / h.norm();
}

// Hartley conditioning: zero mean, sqrt(2) RMS distance.
Eigen::Matrix3d conditioner(std::span<const Point> pts) {
    double mx = 0.0;
    double my = 0.0;
    for (const auto& p : pts) {
        mx += p.x;
        my += p.y;
    }
    mx /= pts.size();
    my /= pts.size();
    double rms = 0.0;
    for (const auto& p : pts) rms += (p.x - mx) * (p.x - mx) + (p.y - my) * (p.y - my);
    rms = std::sqrt(rms / pts.size());
    const double s = rms > 0.0 ? std::sqrt(2.0) / rms : 1.0;
    Eigen::Matrix3d t;
    t << s, 0, -s * mx, 0, s, -s * my, 0, 0, 1;
    return t;
}

bool has_collinear_triple(std::span<const Point> p) {
    double scale = 0.0;
    for (const auto& a : p)
        for (const auto& b : p) scale = std::max(scale, std::hypot(a.x - b.x, a.y - b.y));
    if (scale == 0.0) return true;
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = i + 1; j < p.size(); ++j)
            for (std::size_t k = j + 1; k < p.size(); ++k) {
                const double area =
                    (p[j].x - p[i].x) * (p[k].y - p[i].y) - (p[j].y - p[i].y) * (p[k].x - p[i].x);
                if (std::abs(area) < 1e-9 * scale * scale) return true;
            }
    return false;
}

double transfer_error(const Homography& h, const Correspondence& c) {
    const auto m = h.map(c.ref);
    if (!m) return std::numeric_limits<double>::infinity();
    return std::hypot(m->x - c.tgt.x, m->y - c.tgt.y);
}

}  // namespace

Homography::Homography(const Eigen::Matrix3d& h) : h_(normalize(h)) {}

Homography Homography::translation(double tx, double ty) {
    Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
    m(0, 2) = tx;
    m(1, 2) = ty;
    return Homography(m);
}

Homography Homography::inverse() const {
    const double det = h_.determinant();
    if (!std::isfinite(det) || std::abs(det) < kDetTolerance) throw SingularSystem("homography is singular");
    return Homography(h_.inverse());
}

std::optional<Point> Homography::map(Point p) const {
    const double w = h_(2, 0) * p.x + h_(2, 1) * p.y + h_(2, 2);
    if (std::abs(w) < kInfinityTolerance) return std::nullopt;
    return Point{(h_(0, 0) * p.x + h_(0, 1) * p.y + h_(0, 2)) / w, (h_(1, 0) * p.x + h_(1, 1) * p.y + h_(1, 2)) / w};
}

Homography operator*(const Homography& a, const Homography& b) { return Homography(a.h_ * b.h_); }

std::array<double, 9> Homography::values() const {
    std::array<double, 9> v{};
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) v[r * 3 + c] = h_(r, c);
    return v;
}

FourPtOffsets FourPtOffsets::scaled(double s) const {
    FourPtOffsets out = *this;
    for (auto& o : out.offsets) {
        o.x *= s;
        o.y *= s;
    }
    return out;
}

std::array<Point, 4> frame_corners(int frame_w, int frame_h) {
    const double r = frame_w - 1.0;
    const double b = frame_h - 1.0;
    return {Point{0.0, 0.0}, Point{r, 0.0}, Point{0.0, b}, Point{r, b}};
}

Homography solve_dlt(std::span<const Correspondence> pairs) {
    const std::size_t n = pairs.size();
    if (n < 4) throw SingularSystem("DLT needs at least 4 correspondences, got " + std::to_string(n));
    std::vector<Point> src(n);
    std::vector<Point> dst(n);
    for (std::size_t i = 0; i < n; ++i) {
        src[i] = pairs[i].ref;
        dst[i] = pairs[i].tgt;
        if (!std::isfinite(src[i].x) || !std::isfinite(src[i].y) || !std::isfinite(dst[i].x) ||
            !std::isfinite(dst[i].y))
            throw ContractViolation("DLT: non-finite coordinate at pair " + std::to_string(i));
    }
    if (n == 4 && (has_collinear_triple(src) || has_collinear_triple(dst)))
        throw SingularSystem("DLT: three of the four points are collinear");

    const Eigen::Matrix3d ts = conditioner(src);
    const Eigen::Matrix3d td = conditioner(dst);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(2 * std::max<std::size_t>(n, 5)), 9);
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector3d p = ts * Eigen::Vector3d(src[i].x, src[i].y, 1.0);
        const Eigen::Vector3d q = td * Eigen::Vector3d(dst[i].x, dst[i].y, 1.0);
        const auto r = static_cast<Eigen::Index>(2 * i);
        a.row(r) << 0, 0, 0, -p.x(), -p.y(), -1, q.y() * p.x(), q.y() * p.y(), q.y();
        a.row(r + 1) << p.x(), p.y(), 1, 0, 0, 0, -q.x() * p.x(), -q.x() * p.y(), -q.x();
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    if (s(0) == 0.0 || s(7) / s(0) < 1e-10) throw SingularSystem("DLT: degenerate point configuration");
    const Eigen::VectorXd v = svd.matrixV().col(8);
    Eigen::Matrix3d hn;
    hn << v(0), v(1), v(2), v(3), v(4), v(5), v(6), v(7), v(8);
    const Eigen::Matrix3d h = td.inverse() * hn * ts;
    if (std::abs(normalize(h).determinant()) < kDetTolerance) throw SingularSystem("DLT: singular homography");
    return Homography(h);
}

RansacResult ransac_fit(std::span<const Correspondence> pairs, double threshold_px, int iterations,
                        std::uint64_t seed) {
    const std::size_t n = pairs.size();
    if (n < 4) throw NoModel("RANSAC needs at least 4 correspondences, got " + std::to_string(n));
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> best_inliers;
    for (int it = 0; it < std::max(iterations, 1); ++it) {
        std::array<std::size_t, 4> idx{};
        for (std::size_t k = 0; k < 4; ++k) {
            bool fresh = false;
            while (!fresh) {
                idx[k] = static_cast<std::size_t>(rng() % n);
                fresh = std::find(idx.begin(), idx.begin() + k, idx[k]) == idx.begin() + k;
            }
        }
        std::array<Correspondence, 4> sample{pairs[idx[0]], pairs[idx[1]], pairs[idx[2]], pairs[idx[3]]};
        Homography candidate;
        try {
            candidate = solve_dlt(sample);
        } catch (const SingularSystem&) {
            continue;
        }
        std::vector<std::size_t> inliers;
        for (std::size_t i = 0; i < n; ++i)
            if (transfer_error(candidate, pairs[i]) < threshold_px) inliers.push_back(i);
        if (inliers.size() > best_inliers.size()) best_inliers = std::move(inliers);
        if (best_inliers.size() == n) break;
    }
    if (best_inliers.size() < 4)
        throw NoModel("RANSAC found only " + std::to_string(best_inliers.size()) + " inliers");
    std::vector<Correspondence> support;
    support.reserve(best_inliers.size());
    for (auto i : best_inliers) support.push_back(pairs[i]);
    return {solve_dlt(support), std::move(best_inliers)};
}

Homography offsets_to_homography(const FourPtOffsets& o) {
    const auto corners = frame_corners(o.frame_w, o.frame_h);
    std::array<Correspondence, 4> pairs{};
    bool zero = true;
    for (std::size_t i = 0; i < 4; ++i) {
        if (!std::isfinite(o.offsets[i].x) || !std::isfinite(o.offsets[i].y))
            throw ContractViolation("4-pt offsets must be finite");
        pairs[i] = {corners[i], Point{corners[i].x + o.offsets[i].x, corners[i].y + o.offsets[i].y}};
        zero = zero && o.offsets[i].x == 0.0 && o.offsets[i].y == 0.0;
    }
    // exact identity rather than the DLT's round-off
    if (zero) return Homography::identity();
    return solve_dlt(pairs);
}

FourPtOffsets homography_to_offsets(const Homography& h, int frame_w, int frame_h) {
    FourPtOffsets o;
    o.frame_w = frame_w;
    o.frame_h = frame_h;
    const auto corners = frame_corners(frame_w, frame_h);
    for (std::size_t i = 0; i < 4; ++i) {
        const auto m = h.map(corners[i]);
        if (!m) throw SingularSystem("corner maps to infinity");
        o.offsets[i] = {m->x - corners[i].x, m->y - corners[i].y};
    }
    return o;
}

MiddlePlane decompose_middle_plane(const FourPtOffsets& o) {
    const Homography full = offsets_to_homography(o);
    const Homography tgt = offsets_to_homography(o.scaled(0.5));
    return {full.inverse() * tgt, tgt};
}

std::vector<Point> apply_homography(const Homography& h, std::span<const Point> points) {
    std::vector<Point> out;
    out.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto m = h.map(points[i]);
        if (!m) throw ContractViolation("apply_homography: point " + std::to_string(i) + " maps to infinity");
        out.push_back(*m);
    }
    return out;
}

FlowField sampling_flow(const Homography& h, int height, int width, Point origin, Exec exec) {
    FlowField flow(height, width);
#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const Point p{x + origin.x, y + origin.y};
            const auto m = h.map(p);
            const std::size_t i = flow.index(y, x);
            flow.dx[i] = m ? m->x - p.x : kFarAway;
            flow.dy[i] = m ? m->y - p.y : kFarAway;
        }
    }
    return flow;
}

FlowField homography_to_flow(const Homography& h, int height, int width, Exec exec) {
    return sampling_flow(h.inverse(), height, width, {}, exec);
}

}  // namespace warpforge
