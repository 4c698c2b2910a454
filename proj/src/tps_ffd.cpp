#include "warpforge/tps_ffd.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <new>
#include <sstream>

#include "warpforge/error.hpp"
#include "warpforge/synthetic.hpp"

namespace warpforge {

double tps_kernel(double r2) { return r2 > 0.0 ? r2 * std::log(r2) : 0.0; }

ControlGrid ControlGrid::uniform(int U, int V, int frame_w, int frame_h) {
    if (U < 1 || V < 1) throw ContractViolation("control grid needs U, V >= 1");
    ControlGrid g;
    g.U = U;
    g.V = V;
    g.frame_w = frame_w;
    g.frame_h = frame_h;
    g.source.reserve(static_cast<std::size_t>(U + 1) * (V + 1));
    for (int i = 0; i <= U; ++i)
        for (int j = 0; j <= V; ++j)
            g.source.push_back({(frame_w - 1.0) * j / V, (frame_h - 1.0) * i / U});
    g.offsets.assign(g.source.size(), Point{});
    return g;
}

std::vector<Point> ControlGrid::targets() const {
    std::vector<Point> t(source.size());
    for (std::size_t k = 0; k < source.size(); ++k) t[k] = {source[k].x + offsets[k].x, source[k].y + offsets[k].y};
    return t;
}

namespace {

// Kernel coordinates are divided by this scale to keep the TPS system well
// conditioned; the interpolant itself is scale invariant.
double coordinate_scale(int frame_w, int frame_h) { return std::max({frame_w - 1.0, frame_h - 1.0, 1.0}); }

Eigen::MatrixXd system_matrix(const std::vector<Point>& src, double scale) {
    const auto n = static_cast<Eigen::Index>(src.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + 3, n + 3);
    const double inv = 1.0 / scale;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double dx = (src[i].x - src[j].x) * inv;
            const double dy = (src[i].y - src[j].y) * inv;
            a(i, j) = tps_kernel(dx * dx + dy * dy);
        }
        a(i, n) = a(n, i) = 1.0;
        a(i, n + 1) = a(n + 1, i) = src[i].x * inv;
        a(i, n + 2) = a(n + 2, i) = src[i].y * inv;
    }
    return a;
}

}  // namespace

Point TpsSolution::displacement(Point p) const {
    const double inv = 1.0 / coordinate_scale(frame_w, frame_h);
    const double px = p.x * inv;
    const double py = p.y * inv;
    double dx = affine(0, 0) + affine(1, 0) * px + affine(2, 0) * py;
    double dy = affine(0, 1) + affine(1, 1) * px + affine(2, 1) * py;
    for (std::size_t k = 0; k < source.size(); ++k) {
        const double rx = px - source[k].x * inv;
        const double ry = py - source[k].y * inv;
        const double u = tps_kernel(rx * rx + ry * ry);
        dx += kernel_weights(static_cast<Eigen::Index>(k), 0) * u;
        dy += kernel_weights(static_cast<Eigen::Index>(k), 1) * u;
    }
    return {dx, dy};
}

Eigen::Matrix<double, 3, 2> TpsSolution::mapping_affine() const {
    // affine rows act on normalized coordinates; convert to pixel units
    const double inv = 1.0 / coordinate_scale(frame_w, frame_h);
    Eigen::Matrix<double, 3, 2> m;
    m.row(0) = affine.row(0);
    m.row(1) = affine.row(1) * inv;
    m.row(2) = affine.row(2) * inv;
    m(1, 0) += 1.0;
    m(2, 1) += 1.0;
    return m;
}

TpsSystem::TpsSystem(const ControlGrid& layout) : layout_(layout) {
    const auto& src = layout_.source;
    for (std::size_t i = 0; i < src.size(); ++i)
        for (std::size_t j = i + 1; j < src.size(); ++j)
            if (src[i].x == src[j].x && src[i].y == src[j].y)
                throw SingularSystem("TPS: control points " + std::to_string(i) + " and " + std::to_string(j) +
                                     " coincide");
    lu_.compute(system_matrix(src, coordinate_scale(layout_.frame_w, layout_.frame_h)));
    const double rc = lu_.rcond();
    if (!std::isfinite(rc) || rc < 1e-15) throw SingularSystem("TPS: system matrix is singular");
}

TpsSolution TpsSystem::fit(std::span<const Point> offsets) const {
    const auto n = static_cast<Eigen::Index>(layout_.source.size());
    if (offsets.size() != layout_.source.size()) throw ContractViolation("TPS fit: offset count mismatch");
    Eigen::MatrixX2d rhs = Eigen::MatrixX2d::Zero(n + 3, 2);
    bool all_zero = true;
    for (Eigen::Index k = 0; k < n; ++k) {
        if (!std::isfinite(offsets[k].x) || !std::isfinite(offsets[k].y))
            throw ContractViolation("TPS fit: non-finite offset");
        rhs(k, 0) = offsets[k].x;
        rhs(k, 1) = offsets[k].y;
        all_zero = all_zero && offsets[k].x == 0.0 && offsets[k].y == 0.0;
    }
    TpsSolution sol;
    sol.U = layout_.U;
    sol.V = layout_.V;
    sol.frame_w = layout_.frame_w;
    sol.frame_h = layout_.frame_h;
    sol.source = layout_.source;
    sol.kernel_weights = Eigen::MatrixX2d::Zero(n, 2);
    if (all_zero) return sol;
    const Eigen::MatrixX2d coef = lu_.solve(rhs);
    sol.kernel_weights = coef.topRows(n);
    sol.affine = coef.bottomRows(3);
    return sol;
}

Eigen::MatrixX2d TpsSystem::adjoint(const Eigen::MatrixX2d& coefficient_grad) const {
    const auto n = static_cast<Eigen::Index>(layout_.source.size());
    // the system matrix is symmetric, so A^-T = A^-1
    const Eigen::MatrixX2d g = lu_.solve(coefficient_grad);
    return g.topRows(n);
}

TpsSolution tps_fit(const ControlGrid& grid) { return TpsSystem(grid).fit(grid.offsets); }

Meshgrid Meshgrid::pixels(int width, int height, Point origin) {
    Meshgrid m;
    m.rows = height;
    m.cols = width;
    m.coords.reserve(static_cast<std::size_t>(width) * height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) m.coords.push_back({x + origin.x, y + origin.y});
    return m;
}

FlowField tps_eval_flow(const TpsSolution& sol, const Meshgrid& mesh, const TpsEvalOptions& opts, Exec exec,
                        EvalStats* stats) {
    const std::size_t n = sol.source.size();
    const std::size_t width = n + 3;
    const double inv = 1.0 / coordinate_scale(sol.frame_w, sol.frame_h);
    FlowField flow(mesh.rows, mesh.cols);
    const std::size_t total = mesh.coords.size();
    if (total == 0) return flow;

    std::size_t block_rows = static_cast<std::size_t>(mesh.rows);
    if (opts.max_matrix_bytes > 0) {
        const std::size_t row_bytes = static_cast<std::size_t>(mesh.cols) * width * sizeof(double);
        block_rows = std::clamp<std::size_t>(opts.max_matrix_bytes / std::max<std::size_t>(row_bytes, 1), 1,
                                             static_cast<std::size_t>(mesh.rows));
    }
    const std::size_t block_pixels = block_rows * mesh.cols;
    std::vector<double> kmat(block_pixels * width);
    if (stats) stats->max_intermediate_bytes = std::max(stats->max_intermediate_bytes, kmat.size() * sizeof(double));

    std::vector<double> coef_x(width);
    std::vector<double> coef_y(width);
    for (std::size_t k = 0; k < n; ++k) {
        coef_x[k] = sol.kernel_weights(static_cast<Eigen::Index>(k), 0);
        coef_y[k] = sol.kernel_weights(static_cast<Eigen::Index>(k), 1);
    }
    for (int r = 0; r < 3; ++r) {
        coef_x[n + r] = sol.affine(r, 0);
        coef_y[n + r] = sol.affine(r, 1);
    }
    std::vector<double> sx(n);
    std::vector<double> sy(n);
    for (std::size_t k = 0; k < n; ++k) {
        sx[k] = sol.source[k].x * inv;
        sy[k] = sol.source[k].y * inv;
    }

    for (std::size_t start = 0; start < total; start += block_pixels) {
        const auto count = static_cast<std::ptrdiff_t>(std::min(block_pixels, total - start));
#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
        for (std::ptrdiff_t i = 0; i < count; ++i) {
            const Point p = mesh.coords[start + i];
            const double px = p.x * inv;
            const double py = p.y * inv;
            double* row = kmat.data() + i * width;
            for (std::size_t k = 0; k < n; ++k) {
                const double rx = px - sx[k];
                const double ry = py - sy[k];
                row[k] = tps_kernel(rx * rx + ry * ry);
            }
            row[n] = 1.0;
            row[n + 1] = px;
            row[n + 2] = py;
        }
#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
        for (std::ptrdiff_t i = 0; i < count; ++i) {
            const double* row = kmat.data() + i * width;
            double dx = 0.0;
            double dy = 0.0;
            for (std::size_t k = 0; k < width; ++k) {
                dx += row[k] * coef_x[k];
                dy += row[k] * coef_y[k];
            }
            flow.dx[start + i] = dx;
            flow.dy[start + i] = dy;
        }
    }
    return flow;
}

std::vector<double> tps_design_matrix(const ControlGrid& layout, const Meshgrid& mesh, Exec exec) {
    const std::size_t n = layout.source.size();
    const std::size_t width = n + 3;
    const double inv = 1.0 / coordinate_scale(layout.frame_w, layout.frame_h);
    std::vector<double> m(mesh.coords.size() * width);
    const auto count = static_cast<std::ptrdiff_t>(mesh.coords.size());
#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        const double px = mesh.coords[i].x * inv;
        const double py = mesh.coords[i].y * inv;
        double* row = m.data() + i * width;
        for (std::size_t k = 0; k < n; ++k) {
            const double rx = px - layout.source[k].x * inv;
            const double ry = py - layout.source[k].y * inv;
            row[k] = tps_kernel(rx * rx + ry * ry);
        }
        row[n] = 1.0;
        row[n + 1] = px;
        row[n + 2] = py;
    }
    return m;
}

std::array<std::vector<double>, 2> tps_coefficients(const TpsSolution& sol) {
    const std::size_t n = sol.source.size();
    std::array<std::vector<double>, 2> c{std::vector<double>(n + 3), std::vector<double>(n + 3)};
    for (int a = 0; a < 2; ++a) {
        for (std::size_t k = 0; k < n; ++k) c[a][k] = sol.kernel_weights(static_cast<Eigen::Index>(k), a);
        for (int r = 0; r < 3; ++r) c[a][n + r] = sol.affine(r, a);
    }
    return c;
}

std::array<double, 4> bspline_weights(double t) {
    const double t2 = t * t;
    const double t3 = t2 * t;
    return {(1.0 - 3.0 * t + 3.0 * t2 - t3) / 6.0, (4.0 - 6.0 * t2 + 3.0 * t3) / 6.0,
            (1.0 + 3.0 * t + 3.0 * t2 - 3.0 * t3) / 6.0, t3 / 6.0};
}

BsplineWeights bspline_basis(double t) {
    if (!(t >= 0.0 && t < 1.0)) throw ContractViolation("bspline_basis: t must lie in [0,1)");
    return {t, bspline_weights(t)};
}

Meshgrid compress_mesh(int frame_w, int frame_h, int U, int V, Point origin) {
    if (U < 1 || V < 1) throw ContractViolation("compress_mesh: U, V >= 1");
    Meshgrid m;
    m.rows = 2 * (U + 1);
    m.cols = 2 * (V + 1);
    m.coords.reserve(static_cast<std::size_t>(m.rows) * m.cols);
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j)
            m.coords.push_back({origin.x + (frame_w - 1.0) * j / (m.cols - 1),
                                origin.y + (frame_h - 1.0) * i / (m.rows - 1)});
    return m;
}

namespace {

struct KnotLookup {
    std::vector<int> cell;
    std::vector<std::array<double, 4>> weights;
};

// Cell index and basis weights for every output coordinate along one axis.
// The last knot belongs to the previous cell with t = 1.
KnotLookup knot_lookup(int pixels, int lattice) {
    KnotLookup k;
    k.cell.resize(pixels);
    k.weights.resize(pixels);
    const double spacing = pixels > 1 ? (pixels - 1.0) / (lattice - 1) : 1.0;
    for (int p = 0; p < pixels; ++p) {
        const double g = p / spacing;
        int c = static_cast<int>(std::floor(g));
        c = std::clamp(c, 0, lattice - 2);
        k.cell[p] = c;
        k.weights[p] = bspline_weights(g - c);
    }
    return k;
}

// Lattice padded by one node on each side, linear extrapolation.
std::vector<double> pad_lattice(const std::vector<double>& v, int rows, int cols) {
    const int pr = rows + 2;
    const int pc = cols + 2;
    std::vector<double> p(static_cast<std::size_t>(pr) * pc, 0.0);
    auto at = [&](int r, int c) -> double& { return p[static_cast<std::size_t>(r) * pc + c]; };
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) at(r + 1, c + 1) = v[static_cast<std::size_t>(r) * cols + c];
    for (int c = 1; c <= cols; ++c) {
        at(0, c) = 2.0 * at(1, c) - at(2, c);
        at(rows + 1, c) = 2.0 * at(rows, c) - at(rows - 1, c);
    }
    for (int r = 0; r < pr; ++r) {
        at(r, 0) = 2.0 * at(r, 1) - at(r, 2);
        at(r, cols + 1) = 2.0 * at(r, cols) - at(r, cols - 1);
    }
    return p;
}

std::vector<double> unpad_adjoint(std::vector<double> g, int rows, int cols) {
    const int pc = cols + 2;
    auto at = [&](int r, int c) -> double& { return g[static_cast<std::size_t>(r) * pc + c]; };
    for (int r = 0; r < rows + 2; ++r) {
        at(r, cols) += 2.0 * at(r, cols + 1);
        at(r, cols - 1) -= at(r, cols + 1);
        at(r, 1) += 2.0 * at(r, 0);
        at(r, 2) -= at(r, 0);
    }
    for (int c = 1; c <= cols; ++c) {
        at(rows, c) += 2.0 * at(rows + 1, c);
        at(rows - 1, c) -= at(rows + 1, c);
        at(1, c) += 2.0 * at(0, c);
        at(2, c) -= at(0, c);
    }
    std::vector<double> out(static_cast<std::size_t>(rows) * cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) out[static_cast<std::size_t>(r) * cols + c] = at(r + 1, c + 1);
    return out;
}

}  // namespace

FlowField ffd_upsample(const FlowField& sparse, int frame_w, int frame_h, Exec exec, EvalStats* stats) {
    const int rows = sparse.height;
    const int cols = sparse.width;
    if (rows < 4 || cols < 4) throw ContractViolation("ffd_upsample: lattice must be at least 4x4");
    if (frame_w < 1 || frame_h < 1) throw ContractViolation("ffd_upsample: empty frame");
    const int pc = cols + 2;
    const std::vector<double> pad_x = pad_lattice(sparse.dx, rows, cols);
    const std::vector<double> pad_y = pad_lattice(sparse.dy, rows, cols);
    const KnotLookup kx = knot_lookup(frame_w, cols);
    const KnotLookup ky = knot_lookup(frame_h, rows);
    if (stats)
        stats->max_intermediate_bytes =
            std::max(stats->max_intermediate_bytes, 2 * pad_x.size() * sizeof(double));

    FlowField dense(frame_h, frame_w);
#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
    for (int y = 0; y < frame_h; ++y) {
        std::vector<double> tx(pc, 0.0);
        std::vector<double> ty(pc, 0.0);
        const int v = ky.cell[y];
        const auto& wy = ky.weights[y];
        for (int c = 0; c < pc; ++c) {
            double ax = 0.0;
            double ay = 0.0;
            for (int b = 0; b < 4; ++b) {
                const std::size_t idx = static_cast<std::size_t>(v + b) * pc + c;
                ax += wy[b] * pad_x[idx];
                ay += wy[b] * pad_y[idx];
            }
            tx[c] = ax;
            ty[c] = ay;
        }
        for (int x = 0; x < frame_w; ++x) {
            const int u = kx.cell[x];
            const auto& wx = kx.weights[x];
            double ax = 0.0;
            double ay = 0.0;
            for (int a = 0; a < 4; ++a) {
                ax += wx[a] * tx[u + a];
                ay += wx[a] * ty[u + a];
            }
            const std::size_t i = dense.index(y, x);
            dense.dx[i] = ax;
            dense.dy[i] = ay;
        }
    }
    return dense;
}

FlowField ffd_upsample_adjoint(const FlowField& dense_grad, int lattice_rows, int lattice_cols, Exec exec) {
    const int rows = lattice_rows;
    const int cols = lattice_cols;
    if (rows < 4 || cols < 4) throw ContractViolation("ffd_upsample_adjoint: lattice must be at least 4x4");
    const int w = dense_grad.width;
    const int h = dense_grad.height;
    const int pc = cols + 2;
    const KnotLookup kx = knot_lookup(w, cols);
    const KnotLookup ky = knot_lookup(h, rows);

    // per-row column accumulators, reduced serially in row order afterwards
    std::vector<double> row_x(static_cast<std::size_t>(h) * pc, 0.0);
    std::vector<double> row_y(static_cast<std::size_t>(h) * pc, 0.0);
#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
    for (int y = 0; y < h; ++y) {
        double* ax = row_x.data() + static_cast<std::size_t>(y) * pc;
        double* ay = row_y.data() + static_cast<std::size_t>(y) * pc;
        for (int x = 0; x < w; ++x) {
            const std::size_t i = dense_grad.index(y, x);
            const int u = kx.cell[x];
            const auto& wx = kx.weights[x];
            for (int a = 0; a < 4; ++a) {
                ax[u + a] += wx[a] * dense_grad.dx[i];
                ay[u + a] += wx[a] * dense_grad.dy[i];
            }
        }
    }
    std::vector<double> pad_x(static_cast<std::size_t>(rows + 2) * pc, 0.0);
    std::vector<double> pad_y(pad_x.size(), 0.0);
    for (int y = 0; y < h; ++y) {
        const int v = ky.cell[y];
        const auto& wy = ky.weights[y];
        for (int b = 0; b < 4; ++b)
            for (int c = 0; c < pc; ++c) {
                const std::size_t idx = static_cast<std::size_t>(v + b) * pc + c;
                pad_x[idx] += wy[b] * row_x[static_cast<std::size_t>(y) * pc + c];
                pad_y[idx] += wy[b] * row_y[static_cast<std::size_t>(y) * pc + c];
            }
    }
    FlowField out(rows, cols);
    out.dx = unpad_adjoint(std::move(pad_x), rows, cols);
    out.dy = unpad_adjoint(std::move(pad_y), rows, cols);
    return out;
}

FlowField ffd_tps_eval(const TpsSolution& sol, int frame_w, int frame_h, Point origin, Exec exec, EvalStats* stats) {
    const Meshgrid lattice = compress_mesh(frame_w, frame_h, sol.U, sol.V, origin);
    TpsEvalOptions whole;
    whole.max_matrix_bytes = 0;
    const FlowField sparse = tps_eval_flow(sol, lattice, whole, exec, stats);
    return ffd_upsample(sparse, frame_w, frame_h, exec, stats);
}

namespace {

template <typename F>
double median_ms(int repeats, F&& body) {
    std::vector<double> times;
    for (int r = 0; r < std::max(repeats, 1); ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        body();
        const auto t1 = std::chrono::steady_clock::now();
        times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    std::sort(times.begin(), times.end());
    const std::size_t m = times.size() / 2;
    return times.size() % 2 ? times[m] : 0.5 * (times[m - 1] + times[m]);
}

double mean_deviation(const FlowField& a, const FlowField& b) {
    std::vector<double> per_row(a.height, 0.0);
    for (int y = 0; y < a.height; ++y)
        for (int x = 0; x < a.width; ++x) {
            const std::size_t i = a.index(y, x);
            per_row[y] += std::hypot(a.dx[i] - b.dx[i], a.dy[i] - b.dy[i]);
        }
    return pairwise_sum(per_row) / static_cast<double>(a.dx.size());
}

}  // namespace

std::vector<BenchRow> bench_tps(const BenchConfig& cfg) {
    std::vector<BenchRow> rows;
    for (const auto& [h, w] : cfg.resolutions) {
        if (h <= 0 || w <= 0) throw ContractViolation("bench: resolutions must be positive");
        const std::string res = std::to_string(h) + "x" + std::to_string(w);
        const SyntheticWarp warp = make_synthetic_warp(cfg.seed, w, h, 0.03, 0.02);
        const TpsSolution sol = tps_fit(warp.control_grid(cfg.U, cfg.V));
        const Meshgrid full = Meshgrid::pixels(w, h);

        std::vector<Exec> policies{Exec::Serial};
        if (cfg.multithreaded) policies.push_back(Exec::Parallel);
        for (Exec exec : policies) {
            const std::string suffix = exec == Exec::Serial ? "-serial" : "-omp";
            BenchRow vanilla{res, "vanilla" + suffix};
            BenchRow ffd{res, "ffd" + suffix};
            FlowField vflow;
            FlowField fflow;
            try {
                EvalStats st;
                vanilla.median_ms = median_ms(cfg.repeats, [&] { vflow = tps_eval_flow(sol, full, cfg.vanilla, exec, &st); });
                vanilla.max_intermediate_bytes = st.max_intermediate_bytes;
            } catch (const std::bad_alloc&) {
                vanilla.failed = true;
            }
            try {
                EvalStats st;
                ffd.median_ms = median_ms(cfg.repeats, [&] { fflow = ffd_tps_eval(sol, w, h, {}, exec, &st); });
                ffd.max_intermediate_bytes = st.max_intermediate_bytes;
            } catch (const std::bad_alloc&) {
                ffd.failed = true;
            }
            if (!vanilla.failed && !ffd.failed) ffd.mean_flow_dev_px = mean_deviation(fflow, vflow);
            rows.push_back(vanilla);
            rows.push_back(ffd);
        }
    }
    return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
    std::ostringstream out;
    out.precision(10);
    out << "resolution,method,median_ms,max_intermediate_bytes,mean_flow_dev_px\n";
    for (const auto& r : rows) {
        out << r.resolution << ',' << r.method << ',';
        if (r.failed)
            out << "nan," << r.max_intermediate_bytes << ",nan\n";
        else
            out << r.median_ms << ',' << r.max_intermediate_bytes << ',' << r.mean_flow_dev_px << '\n';
    }
    return out.str();
}

}  // namespace warpforge
