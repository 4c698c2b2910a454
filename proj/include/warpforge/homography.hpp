#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "warpforge/imaging.hpp"

namespace warpforge {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Projective transform acting on column vectors (x, y, 1). Stored with
/// h33 = 1 whenever h33 is not (numerically) zero.
class Homography {
public:
    Homography() : h_(Eigen::Matrix3d::Identity()) {}
    explicit Homography(const Eigen::Matrix3d& h);

    static Homography identity() { return Homography(); }
    static Homography translation(double tx, double ty);

    const Eigen::Matrix3d& matrix() const { return h_; }
    double operator()(int r, int c) const { return h_(r, c); }

    /// Throws SingularSystem when the matrix is not invertible.
    Homography inverse() const;

    /// Projective mapping; nullopt when the point maps to infinity.
    std::optional<Point> map(Point p) const;

    /// Matrix product, renormalized.
    friend Homography operator*(const Homography& a, const Homography& b);

    /// Row-major copy of the 9 entries.
    std::array<double, 9> values() const;

private:
    Eigen::Matrix3d h_;
};

/// Corner displacements in TL, TR, BL, BR order. Corners sit at (0,0),
/// (W-1,0), (0,H-1), (W-1,H-1).
struct FourPtOffsets {
    std::array<Point, 4> offsets{};
    int frame_w = 0;
    int frame_h = 0;

    FourPtOffsets scaled(double s) const;
};

std::array<Point, 4> frame_corners(int frame_w, int frame_h);

struct Correspondence {
    Point ref;
    Point tgt;
};

/// Normalized DLT; the result maps ref points onto tgt points.
Homography solve_dlt(std::span<const Correspondence> pairs);

struct RansacResult {
    Homography model;
    std::vector<std::size_t> inliers;  // ascending
};

/// Four-point RANSAC with a least-squares refit on the best consensus set.
/// Ties between candidates go to the earliest iteration.
RansacResult ransac_fit(std::span<const Correspondence> pairs, double threshold_px, int iterations,
                        std::uint64_t seed);

Homography offsets_to_homography(const FourPtOffsets& o);
FourPtOffsets homography_to_offsets(const Homography& h, int frame_w, int frame_h);

/// Middle-plane split of a ref->tgt homography. Both results are sampling
/// maps from the middle plane: `tgt` into the target image, `ref` into the
/// reference image, so that H * ref == tgt.
struct MiddlePlane {
    Homography ref;
    Homography tgt;
};

MiddlePlane decompose_middle_plane(const FourPtOffsets& o);

/// Throws ContractViolation naming the first point that maps to infinity.
std::vector<Point> apply_homography(const Homography& h, std::span<const Point> points);

/// Flow of the forward transform h, backward convention: flow(p) = h^-1(p) - p.
FlowField homography_to_flow(const Homography& h, int height, int width, Exec exec = Exec::Parallel);

/// Flow that samples through h directly: flow(p) = h(p + origin) - (p + origin).
FlowField sampling_flow(const Homography& h, int height, int width, Point origin = {},
                        Exec exec = Exec::Parallel);

}  // namespace warpforge
