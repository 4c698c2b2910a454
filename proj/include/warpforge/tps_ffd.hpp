#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "warpforge/homography.hpp"
#include "warpforge/imaging.hpp"

namespace warpforge {

/// (U+1) x (V+1) control lattice over [0,W-1]x[0,H-1]: U cells vertically,
/// V cells horizontally. Vertex (i, j) lives at index i*(V+1)+j.
struct ControlGrid {
    int U = 12;
    int V = 12;
    int frame_w = 0;
    int frame_h = 0;
    std::vector<Point> source;
    std::vector<Point> offsets;

    static ControlGrid uniform(int U, int V, int frame_w, int frame_h);

    int rows() const { return U + 1; }
    int cols() const { return V + 1; }
    std::size_t count() const { return source.size(); }

    /// Source + offset for every vertex.
    std::vector<Point> targets() const;
};

/// Thin-plate spline for the displacement field:
///   d(p) = a0 + a1 x + a2 y + sum_k w_k U(|p - s_k|),  U(r) = r^2 log r^2.
struct TpsSolution {
    int U = 0;
    int V = 0;
    int frame_w = 0;
    int frame_h = 0;
    std::vector<Point> source;
    Eigen::MatrixX2d kernel_weights;  // N x 2
    Eigen::Matrix<double, 3, 2> affine = Eigen::Matrix<double, 3, 2>::Zero();  // rows: 1, x, y

    Point displacement(Point p) const;

    /// Affine part of the full mapping p -> p + d(p).
    Eigen::Matrix<double, 3, 2> mapping_affine() const;
};

double tps_kernel(double r2);

/// Factorized TPS system for a fixed source lattice. Fitting is linear in the
/// offsets, so one factorization serves every fit and every adjoint.
class TpsSystem {
public:
    explicit TpsSystem(const ControlGrid& layout);

    TpsSolution fit(std::span<const Point> offsets) const;

    /// Maps a gradient on the coefficients ((N+3) x 2: kernel rows then
    /// 1, x, y) back to a gradient on the N offsets.
    Eigen::MatrixX2d adjoint(const Eigen::MatrixX2d& coefficient_grad) const;

    const ControlGrid& layout() const { return layout_; }

private:
    ControlGrid layout_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

/// Throws SingularSystem when control points coincide.
TpsSolution tps_fit(const ControlGrid& grid);

/// Row-major lattice of evaluation coordinates.
struct Meshgrid {
    int rows = 0;
    int cols = 0;
    std::vector<Point> coords;

    /// Every pixel of a width x height frame, shifted by origin.
    static Meshgrid pixels(int width, int height, Point origin = {});
};

struct TpsEvalOptions {
    /// Budget for the materialized kernel matrix; the mesh is processed in
    /// row blocks that fit (at least one mesh row). 0 materializes the whole
    /// mesh at once.
    std::size_t max_matrix_bytes = std::size_t{256} << 20;
};

struct EvalStats {
    std::size_t max_intermediate_bytes = 0;
};

/// Vanilla path: builds the kernel matrix [U(|p - s_k|), 1, x, y] for the
/// mesh and multiplies it with the coefficients. Output has mesh dimensions.
FlowField tps_eval_flow(const TpsSolution& sol, const Meshgrid& mesh, const TpsEvalOptions& opts = {},
                        Exec exec = Exec::Parallel, EvalStats* stats = nullptr);

/// Evaluation matrix of `mesh` against `layout`: one row [U(|p - s_k|), 1, x, y]
/// per mesh point in the solver's normalized coordinates, row-major with
/// N + 3 columns. flow = rows * [kernel_weights; affine].
std::vector<double> tps_design_matrix(const ControlGrid& layout, const Meshgrid& mesh, Exec exec = Exec::Parallel);

/// Coefficients of `sol` in design-matrix column order, one vector per axis.
std::array<std::vector<double>, 2> tps_coefficients(const TpsSolution& sol);

struct BsplineWeights {
    double t = 0.0;
    std::array<double, 4> n{};
};

/// Uniform cubic B-spline basis at local parameter t in [0,1).
BsplineWeights bspline_basis(double t);

/// Same polynomial without the range check (t = 1 allowed for last knots).
std::array<double, 4> bspline_weights(double t);

/// Corner-aligned 2(U+1) x 2(V+1) lattice spanning the frame.
Meshgrid compress_mesh(int frame_w, int frame_h, int U, int V, Point origin = {});

/// Cubic B-spline restore of a lattice flow (corner-aligned over the frame)
/// to every pixel; the lattice is padded by linear extrapolation.
FlowField ffd_upsample(const FlowField& sparse, int frame_w, int frame_h, Exec exec = Exec::Parallel,
                       EvalStats* stats = nullptr);

/// Adjoint of ffd_upsample: dense gradient -> lattice gradient.
FlowField ffd_upsample_adjoint(const FlowField& dense_grad, int lattice_rows, int lattice_cols,
                               Exec exec = Exec::Parallel);

/// Compress-then-restore evaluation over a frame_w x frame_h region whose
/// top-left pixel sits at origin.
FlowField ffd_tps_eval(const TpsSolution& sol, int frame_w, int frame_h, Point origin = {},
                       Exec exec = Exec::Parallel, EvalStats* stats = nullptr);

struct BenchRow {
    std::string resolution;  // HxW
    std::string method;
    double median_ms = 0.0;
    std::size_t max_intermediate_bytes = 0;
    double mean_flow_dev_px = 0.0;
    bool failed = false;
};

struct BenchConfig {
    std::vector<std::pair<int, int>> resolutions;  // (height, width)
    int U = 12;
    int V = 12;
    int repeats = 3;
    std::uint64_t seed = 7;
    bool multithreaded = true;
    TpsEvalOptions vanilla;
};

std::vector<BenchRow> bench_tps(const BenchConfig& cfg);
std::string bench_csv(const std::vector<BenchRow>& rows);

}  // namespace warpforge
