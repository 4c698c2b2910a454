#include "warpforge/reference.hpp"

#include <algorithm>
#include <cmath>

namespace warpforge::reference {

FlowField tps_eval_flow(const TpsSolution& sol, const Meshgrid& mesh) {
    FlowField flow(mesh.rows, mesh.cols);
    for (std::size_t i = 0; i < mesh.coords.size(); ++i) {
        const Point d = sol.displacement(mesh.coords[i]);
        flow.dx[i] = d.x;
        flow.dy[i] = d.y;
    }
    return flow;
}

namespace {

// Lattice value with linear extrapolation one node past each border.
double padded(const std::vector<double>& v, int rows, int cols, int r, int c) {
    if (r < 0) return 2.0 * padded(v, rows, cols, 0, c) - padded(v, rows, cols, 1, c);
    if (r >= rows) return 2.0 * padded(v, rows, cols, rows - 1, c) - padded(v, rows, cols, rows - 2, c);
    if (c < 0) return 2.0 * padded(v, rows, cols, r, 0) - padded(v, rows, cols, r, 1);
    if (c >= cols) return 2.0 * padded(v, rows, cols, r, cols - 1) - padded(v, rows, cols, r, cols - 2);
    return v[static_cast<std::size_t>(r) * cols + c];
}

}  // namespace

FlowField ffd_upsample(const FlowField& sparse, int frame_w, int frame_h) {
    const int rows = sparse.height;
    const int cols = sparse.width;
    const double hx = frame_w > 1 ? (frame_w - 1.0) / (cols - 1) : 1.0;
    const double hy = frame_h > 1 ? (frame_h - 1.0) / (rows - 1) : 1.0;
    FlowField dense(frame_h, frame_w);
    for (int y = 0; y < frame_h; ++y) {
        const int v = std::clamp(static_cast<int>(std::floor(y / hy)), 0, rows - 2);
        const auto wy = bspline_weights(y / hy - v);
        for (int x = 0; x < frame_w; ++x) {
            const int u = std::clamp(static_cast<int>(std::floor(x / hx)), 0, cols - 2);
            const auto wx = bspline_weights(x / hx - u);
            double sx = 0.0;
            double sy = 0.0;
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b) {
                    const double w = wx[a] * wy[b];
                    sx += w * padded(sparse.dx, rows, cols, v + b - 1, u + a - 1);
                    sy += w * padded(sparse.dy, rows, cols, v + b - 1, u + a - 1);
                }
            const std::size_t i = dense.index(y, x);
            dense.dx[i] = sx;
            dense.dy[i] = sy;
        }
    }
    return dense;
}

}  // namespace warpforge::reference
