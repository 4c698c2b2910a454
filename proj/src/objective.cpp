#include "warpforge/objective.hpp"

#include <cmath>
#include <optional>

#include "warpforge/error.hpp"

namespace warpforge {

void LossConfig::validate() const {
    for (double v : {lambda_H, lambda_T, w_s, w_r, lambda_e, alpha})
        if (!(v >= 0.0) || !std::isfinite(v)) throw ContractViolation("loss config: weights must be finite and >= 0");
    if (U < 2 || V < 2) throw ContractViolation("loss config: U and V must be >= 2");
}

MeshVertices MeshVertices::from_grid(const ControlGrid& grid) {
    MeshVertices m;
    m.U = grid.U;
    m.V = grid.V;
    m.width = grid.frame_w;
    m.height = grid.frame_h;
    m.vertices = grid.targets();
    return m;
}

void MeshVertices::validate() const {
    if (U < 1 || V < 1 || vertices.size() != static_cast<std::size_t>(U + 1) * (V + 1))
        throw ContractViolation("mesh: expected (U+1)x(V+1) vertices");
    for (const Point& p : vertices)
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw ContractViolation("mesh: non-finite vertex");
}

double compose_total(const LossBreakdown& b, const LossConfig& cfg) {
    return cfg.lambda_H * b.align_H + cfg.lambda_T * b.align_T + cfg.w_s * (b.shape_intra + b.shape_inter) +
           cfg.w_r * b.reg;
}

double masked_l1(const Image& ref, const Image& tgt, const FlowField& flow_ref, const FlowField& flow_tgt,
                 Point origin, Exec exec, FlowField* grad_ref, FlowField* grad_tgt) {
    if (ref.channels != tgt.channels) throw ContractViolation("alignment: channel counts differ");
    if (flow_ref.height != flow_tgt.height || flow_ref.width != flow_tgt.width)
        throw ContractViolation("alignment: flow dimensions differ");
    const int h = flow_ref.height;
    const int w = flow_ref.width;
    const int ch = ref.channels;
    const double norm = 1.0 / (static_cast<double>(h) * w * ch);
    if (grad_ref) *grad_ref = FlowField(h, w);
    if (grad_tgt) *grad_tgt = FlowField(h, w);
    std::vector<double> rows(h, 0.0);
#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
    for (int y = 0; y < h; ++y) {
        double acc = 0.0;
        for (int x = 0; x < w; ++x) {
            const std::size_t i = flow_ref.index(y, x);
            const double bx = x + origin.x;
            const double by = y + origin.y;
            const auto a = bilinear_sample_grad(ref, bx + flow_ref.dx[i], by + flow_ref.dy[i]);
            if (!a.in_bounds) continue;
            const auto b = bilinear_sample_grad(tgt, bx + flow_tgt.dx[i], by + flow_tgt.dy[i]);
            if (!b.in_bounds) continue;
            double gax = 0.0, gay = 0.0, gbx = 0.0, gby = 0.0;
            for (int c = 0; c < ch; ++c) {
                const double d = a.values[c] - b.values[c];
                acc += std::abs(d);
                const double s = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
                gax += s * a.ddx[c];
                gay += s * a.ddy[c];
                gbx -= s * b.ddx[c];
                gby -= s * b.ddy[c];
            }
            if (grad_ref) {
                grad_ref->dx[i] = gax * norm;
                grad_ref->dy[i] = gay * norm;
            }
            if (grad_tgt) {
                grad_tgt->dx[i] = gbx * norm;
                grad_tgt->dy[i] = gby * norm;
            }
        }
        rows[y] = acc;
    }
    return pairwise_sum(rows) * norm;
}

AlignmentTerms alignment_loss(const Image& ref, const Image& tgt, const FlowField& h_ref, const FlowField& h_tgt,
                              const FlowField& t_ref, const FlowField& t_tgt, Exec exec) {
    ref.validate();
    tgt.validate();
    auto same = [&](int hh, int ww) { return hh == ref.height && ww == ref.width; };
    if (!same(tgt.height, tgt.width) || !same(h_ref.height, h_ref.width) || !same(h_tgt.height, h_tgt.width) ||
        !same(t_ref.height, t_ref.width) || !same(t_tgt.height, t_tgt.width))
        throw ContractViolation("alignment: images and flows must share dimensions");
    return {masked_l1(ref, tgt, h_ref, h_tgt, {}, exec), masked_l1(ref, tgt, t_ref, t_tgt, {}, exec)};
}

namespace {

double relu(double v) { return v > 0.0 ? v : 0.0; }

std::size_t vid(const MeshVertices& m, int i, int j) { return static_cast<std::size_t>(i) * (m.V + 1) + j; }

// Signed excess of one edge projection over the threshold, per intra mode.
double intra_term(double proj, double limit, IntraMode mode) {
    return mode == IntraMode::AsWritten ? relu(std::abs(proj) - limit) : relu(limit - std::abs(proj));
}

double intra_slope(double proj, double limit, IntraMode mode) {
    const double s = proj > 0.0 ? 1.0 : (proj < 0.0 ? -1.0 : 0.0);
    if (mode == IntraMode::AsWritten) return std::abs(proj) > limit ? s : 0.0;
    return limit > std::abs(proj) ? -s : 0.0;
}

Point sub(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }

// 1 - cos(e1, e2) and its gradients; nullopt when either edge has zero length.
struct Bend {
    double eps;
    Point d1, d2;
};

std::optional<Bend> bend(Point e1, Point e2) {
    const double n1 = std::hypot(e1.x, e1.y);
    const double n2 = std::hypot(e2.x, e2.y);
    if (n1 == 0.0 || n2 == 0.0) return std::nullopt;
    const double dot = e1.x * e2.x + e1.y * e2.y;
    const double cosv = dot / (n1 * n2);
    Bend b;
    b.eps = 1.0 - cosv;
    // d cos / d e1 = e2 / (n1 n2) - cos e1 / n1^2
    b.d1 = {-(e2.x / (n1 * n2) - cosv * e1.x / (n1 * n1)), -(e2.y / (n1 * n2) - cosv * e1.y / (n1 * n1))};
    b.d2 = {-(e1.x / (n1 * n2) - cosv * e2.x / (n2 * n2)), -(e1.y / (n1 * n2) - cosv * e2.y / (n2 * n2))};
    return b;
}

}  // namespace

double intra_grid_loss(const MeshVertices& mesh, const LossConfig& cfg) {
    mesh.validate();
    const double lim_w = cfg.alpha * mesh.width / mesh.V;
    const double lim_h = cfg.alpha * mesh.height / mesh.U;
    double horizontal = 0.0;
    for (int i = 0; i <= mesh.U; ++i)
        for (int j = 0; j < mesh.V; ++j)
            horizontal += intra_term(mesh.at(i, j + 1).x - mesh.at(i, j).x, lim_w, cfg.intra_mode);
    double vertical = 0.0;
    for (int i = 0; i < mesh.U; ++i)
        for (int j = 0; j <= mesh.V; ++j)
            vertical += intra_term(mesh.at(i + 1, j).y - mesh.at(i, j).y, lim_h, cfg.intra_mode);
    return horizontal / ((mesh.U + 1.0) * mesh.V) + vertical / (mesh.U * (mesh.V + 1.0));
}

std::vector<Point> intra_grid_grad(const MeshVertices& mesh, const LossConfig& cfg) {
    mesh.validate();
    const double lim_w = cfg.alpha * mesh.width / mesh.V;
    const double lim_h = cfg.alpha * mesh.height / mesh.U;
    const double nw = 1.0 / ((mesh.U + 1.0) * mesh.V);
    const double nh = 1.0 / (mesh.U * (mesh.V + 1.0));
    std::vector<Point> g(mesh.vertices.size());
    for (int i = 0; i <= mesh.U; ++i)
        for (int j = 0; j < mesh.V; ++j) {
            const double s = nw * intra_slope(mesh.at(i, j + 1).x - mesh.at(i, j).x, lim_w, cfg.intra_mode);
            g[vid(mesh, i, j + 1)].x += s;
            g[vid(mesh, i, j)].x -= s;
        }
    for (int i = 0; i < mesh.U; ++i)
        for (int j = 0; j <= mesh.V; ++j) {
            const double s = nh * intra_slope(mesh.at(i + 1, j).y - mesh.at(i, j).y, lim_h, cfg.intra_mode);
            g[vid(mesh, i + 1, j)].y += s;
            g[vid(mesh, i, j)].y -= s;
        }
    return g;
}

namespace {

// Walks every pair of successive edges. `horizontal` pairs (i,j)->(i,j+1)
// with (i,j+1)->(i,j+2); otherwise (i,j)->(i+1,j) with (i+1,j)->(i+2,j).
// Returns the eps table indexed by the first edge's start vertex.
struct EpsTable {
    std::vector<double> eps;
    std::vector<std::optional<Bend>> bends;
    int skipped = 0;
};

EpsTable eps_table(const MeshVertices& m, bool horizontal) {
    EpsTable t;
    t.eps.assign(m.vertices.size(), 0.0);
    t.bends.assign(m.vertices.size(), std::nullopt);
    const int imax = horizontal ? m.U : m.U - 2;
    const int jmax = horizontal ? m.V - 2 : m.V;
    for (int i = 0; i <= imax; ++i)
        for (int j = 0; j <= jmax; ++j) {
            const Point a = m.at(i, j);
            const Point b = horizontal ? m.at(i, j + 1) : m.at(i + 1, j);
            const Point c = horizontal ? m.at(i, j + 2) : m.at(i + 2, j);
            auto bd = bend(sub(b, a), sub(c, b));
            if (!bd) {
                ++t.skipped;
                continue;
            }
            t.eps[vid(m, i, j)] = bd->eps;
            t.bends[vid(m, i, j)] = bd;
        }
    return t;
}

void require_inter_dims(const MeshVertices& mesh) {
    mesh.validate();
    if (mesh.U < 2 || mesh.V < 2) throw ContractViolation("inter-grid loss needs at least 3x3 vertices");
}

}  // namespace

InterGridValue inter_grid_loss(const MeshVertices& mesh) {
    require_inter_dims(mesh);
    const EpsTable ew = eps_table(mesh, true);
    const EpsTable eh = eps_table(mesh, false);
    // quads: horizontal pairs stacked over rows i, i+1; vertical over columns j, j+1
    double sum_w = 0.0;
    for (int i = 0; i < mesh.U; ++i)
        for (int j = 0; j <= mesh.V - 2; ++j) sum_w += ew.eps[vid(mesh, i, j)] + ew.eps[vid(mesh, i + 1, j)];
    double sum_h = 0.0;
    for (int i = 0; i <= mesh.U - 2; ++i)
        for (int j = 0; j < mesh.V; ++j) sum_h += eh.eps[vid(mesh, i, j)] + eh.eps[vid(mesh, i, j + 1)];
    const double n_w = static_cast<double>(mesh.U) * (mesh.V - 1);
    const double n_h = static_cast<double>(mesh.U - 1) * mesh.V;
    return {sum_w / n_w + sum_h / n_h, ew.skipped + eh.skipped};
}

std::vector<Point> inter_grid_grad(const MeshVertices& mesh) {
    require_inter_dims(mesh);
    const double n_w = static_cast<double>(mesh.U) * (mesh.V - 1);
    const double n_h = static_cast<double>(mesh.U - 1) * mesh.V;
    std::vector<Point> g(mesh.vertices.size());
    for (int pass = 0; pass < 2; ++pass) {
        const bool horizontal = pass == 0;
        const EpsTable t = eps_table(mesh, horizontal);
        const int imax = horizontal ? mesh.U : mesh.U - 2;
        const int jmax = horizontal ? mesh.V - 2 : mesh.V;
        for (int i = 0; i <= imax; ++i)
            for (int j = 0; j <= jmax; ++j) {
                const auto& bd = t.bends[vid(mesh, i, j)];
                if (!bd) continue;
                // how many quads include this eps: rows/columns on the boundary count once
                double mult;
                if (horizontal)
                    mult = ((i > 0) + (i < mesh.U)) / n_w;
                else
                    mult = ((j > 0) + (j < mesh.V)) / n_h;
                const std::size_t a = vid(mesh, i, j);
                const std::size_t b = horizontal ? vid(mesh, i, j + 1) : vid(mesh, i + 1, j);
                const std::size_t c = horizontal ? vid(mesh, i, j + 2) : vid(mesh, i + 2, j);
                // e1 = b - a, e2 = c - b
                g[a].x -= mult * bd->d1.x;
                g[a].y -= mult * bd->d1.y;
                g[b].x += mult * (bd->d1.x - bd->d2.x);
                g[b].y += mult * (bd->d1.y - bd->d2.y);
                g[c].x += mult * bd->d2.x;
                g[c].y += mult * bd->d2.y;
            }
    }
    return g;
}

// ---------------------------------------------------------------------------

struct StitchObjective::State {
    Image ref;
    Image tgt;
    MiddlePlane plane;
    FusionWeights weights;
    LossConfig cfg;
    WarpBackend backend;
    ObjectiveWindow window;
    Exec exec;
    TpsEvalOptions vanilla;

    ControlGrid layout;
    std::optional<TpsSystem> system;
    std::array<FlowField, 2> h_flows;
    double align_h = 0.0;
    double reg = 0.0;

    // Design matrix rows: window pixels (vanilla) or the compressed lattice (ffd).
    Meshgrid eval_mesh;
    std::vector<double> design;  // empty: vanilla rows computed on the fly
    std::size_t cols = 0;

    const Image& image(int v) const { return v == 0 ? ref : tgt; }
    const Homography& homography(int v) const { return v == 0 ? plane.ref : plane.tgt; }

    // Evaluates the design matrix times coefficients over eval_mesh.
    void forward(const std::array<std::vector<double>, 2>& coef, std::vector<double>& ox,
                 std::vector<double>& oy) const;
    // Transposed product, fixed-order reduction over mesh rows.
    std::array<std::vector<double>, 2> backward(const std::vector<double>& gx, const std::vector<double>& gy) const;
    void design_row(std::size_t i, double* row) const;
};

void StitchObjective::State::design_row(std::size_t i, double* row) const {
    const std::size_t n = layout.source.size();
    const double inv = 1.0 / std::max({layout.frame_w - 1.0, layout.frame_h - 1.0, 1.0});
    const double px = eval_mesh.coords[i].x * inv;
    const double py = eval_mesh.coords[i].y * inv;
    for (std::size_t k = 0; k < n; ++k) {
        const double rx = px - layout.source[k].x * inv;
        const double ry = py - layout.source[k].y * inv;
        row[k] = tps_kernel(rx * rx + ry * ry);
    }
    row[n] = 1.0;
    row[n + 1] = px;
    row[n + 2] = py;
}

void StitchObjective::State::forward(const std::array<std::vector<double>, 2>& coef, std::vector<double>& ox,
                                     std::vector<double>& oy) const {
    const auto count = static_cast<std::ptrdiff_t>(eval_mesh.coords.size());
    ox.assign(count, 0.0);
    oy.assign(count, 0.0);
    const bool cached = !design.empty();
#pragma omp parallel if (exec == Exec::Parallel)
    {
        std::vector<double> scratch(cached ? 0 : cols);
#pragma omp for schedule(static)
        for (std::ptrdiff_t i = 0; i < count; ++i) {
            const double* row;
            if (cached) {
                row = design.data() + i * cols;
            } else {
                design_row(static_cast<std::size_t>(i), scratch.data());
                row = scratch.data();
            }
            double ax = 0.0;
            double ay = 0.0;
            for (std::size_t k = 0; k < cols; ++k) {
                ax += row[k] * coef[0][k];
                ay += row[k] * coef[1][k];
            }
            ox[i] = ax;
            oy[i] = ay;
        }
    }
}

std::array<std::vector<double>, 2> StitchObjective::State::backward(const std::vector<double>& gx,
                                                                    const std::vector<double>& gy) const {
    const int rows = eval_mesh.rows;
    const int mcols = eval_mesh.cols;
    std::vector<double> partial(static_cast<std::size_t>(rows) * 2 * cols, 0.0);
    const bool cached = !design.empty();
#pragma omp parallel if (exec == Exec::Parallel)
    {
        std::vector<double> scratch(cached ? 0 : cols);
#pragma omp for schedule(static)
        for (int r = 0; r < rows; ++r) {
            double* px = partial.data() + static_cast<std::size_t>(r) * 2 * cols;
            double* py = px + cols;
            for (int c = 0; c < mcols; ++c) {
                const std::size_t i = static_cast<std::size_t>(r) * mcols + c;
                if (gx[i] == 0.0 && gy[i] == 0.0) continue;
                const double* row;
                if (cached) {
                    row = design.data() + i * cols;
                } else {
                    design_row(i, scratch.data());
                    row = scratch.data();
                }
                for (std::size_t k = 0; k < cols; ++k) {
                    px[k] += row[k] * gx[i];
                    py[k] += row[k] * gy[i];
                }
            }
        }
    }
    std::array<std::vector<double>, 2> out{std::vector<double>(cols, 0.0), std::vector<double>(cols, 0.0)};
    for (int r = 0; r < rows; ++r) {
        const double* px = partial.data() + static_cast<std::size_t>(r) * 2 * cols;
        for (std::size_t k = 0; k < cols; ++k) {
            out[0][k] += px[k];
            out[1][k] += px[cols + k];
        }
    }
    return out;
}

StitchObjective::StitchObjective(Image ref, Image tgt, const MiddlePlane& plane, const FusionWeights& weights,
                                 LossConfig cfg, WarpBackend backend, ObjectiveWindow window, Exec exec,
                                 TpsEvalOptions vanilla)
    : s_(std::make_unique<State>()) {
    cfg.validate();
    ref.validate();
    tgt.validate();
    if (ref.channels != tgt.channels) throw ContractViolation("objective: channel counts differ");
    if (window.width < 2 || window.height < 2) throw ContractViolation("objective: window must be at least 2x2");
    State& s = *s_;
    s.ref = std::move(ref);
    s.tgt = std::move(tgt);
    s.plane = plane;
    s.weights = weights;
    s.cfg = cfg;
    s.backend = backend;
    s.window = window;
    s.exec = exec;
    s.vanilla = vanilla;
    s.layout = ControlGrid::uniform(cfg.U, cfg.V, window.width, window.height);
    s.system.emplace(s.layout);
    for (int v = 0; v < 2; ++v)
        s.h_flows[v] = sampling_flow(s.homography(v), window.height, window.width, window.origin, exec);
    s.align_h = masked_l1(s.ref, s.tgt, s.h_flows[0], s.h_flows[1], window.origin, exec);
    s.reg = reg_loss(weights, cfg.lambda_e);

    s.cols = s.layout.count() + 3;
    if (backend == WarpBackend::Ffd) {
        s.eval_mesh = compress_mesh(window.width, window.height, cfg.U, cfg.V);
        s.design = tps_design_matrix(s.layout, s.eval_mesh, exec);
    } else {
        s.eval_mesh = Meshgrid::pixels(window.width, window.height);
        const std::size_t bytes = s.eval_mesh.coords.size() * s.cols * sizeof(double);
        if (vanilla.max_matrix_bytes == 0 || bytes <= vanilla.max_matrix_bytes)
            s.design = tps_design_matrix(s.layout, s.eval_mesh, exec);
    }
}

StitchObjective::~StitchObjective() = default;
StitchObjective::StitchObjective(StitchObjective&&) noexcept = default;
StitchObjective& StitchObjective::operator=(StitchObjective&&) noexcept = default;

const ControlGrid& StitchObjective::layout() const { return s_->layout; }
const ObjectiveWindow& StitchObjective::window() const { return s_->window; }
const LossConfig& StitchObjective::config() const { return s_->cfg; }
const FlowField& StitchObjective::homography_flow(int view) const { return s_->h_flows.at(view); }

ViewOffsets StitchObjective::initial_offsets() const {
    ViewOffsets o;
    for (int v = 0; v < 2; ++v) {
        auto& out = v == 0 ? o.ref : o.tgt;
        for (const Point& src : s_->layout.source) {
            const Point p{src.x + s_->window.origin.x, src.y + s_->window.origin.y};
            const auto m = s_->homography(v).map(p);
            if (!m) throw NumericalFailure("objective: homography maps a control point to infinity");
            out.push_back({m->x - p.x, m->y - p.y});
        }
    }
    return o;
}

MeshVertices StitchObjective::mesh(int view, const std::vector<Point>& offsets) const {
    const ControlGrid& g = s_->layout;
    if (offsets.size() != g.count()) throw ContractViolation("objective: offset count mismatch");
    MeshVertices m;
    m.U = g.U;
    m.V = g.V;
    m.width = g.frame_w;
    m.height = g.frame_h;
    m.vertices.resize(g.count());
    for (std::size_t k = 0; k < g.count(); ++k)
        m.vertices[k] = {g.source[k].x + s_->window.origin.x + offsets[k].x,
                         g.source[k].y + s_->window.origin.y + offsets[k].y};
    (void)view;
    return m;
}

FlowField StitchObjective::tps_flow(int view, const std::vector<Point>& offsets) const {
    (void)view;
    const State& s = *s_;
    const TpsSolution sol = s.system->fit(offsets);
    const auto coef = tps_coefficients(sol);
    FlowField sparse(s.eval_mesh.rows, s.eval_mesh.cols);
    s.forward(coef, sparse.dx, sparse.dy);
    if (s.backend == WarpBackend::Vanilla) return sparse;
    return ffd_upsample(sparse, s.window.width, s.window.height, s.exec);
}

LossBreakdown StitchObjective::run(const ViewOffsets& offsets, ViewOffsets* grad) const {
    const State& s = *s_;
    const StitchObjective& obj = *this;
    const std::size_t n = s.layout.count();
    if (offsets.ref.size() != n || offsets.tgt.size() != n)
        throw ContractViolation("objective: expected " + std::to_string(n) + " offsets per view");
    LossBreakdown b;
    b.align_H = s.align_h;
    b.reg = s.reg;

    const FlowField f_ref = obj.tps_flow(0, offsets.ref);
    const FlowField f_tgt = obj.tps_flow(1, offsets.tgt);
    FlowField g_ref;
    FlowField g_tgt;
    b.align_T = masked_l1(s.ref, s.tgt, f_ref, f_tgt, s.window.origin, s.exec, grad ? &g_ref : nullptr,
                          grad ? &g_tgt : nullptr);

    for (int v = 0; v < 2; ++v) {
        const MeshVertices m = obj.mesh(v, v == 0 ? offsets.ref : offsets.tgt);
        b.shape_intra += intra_grid_loss(m, s.cfg);
        const InterGridValue inter = inter_grid_loss(m);
        b.shape_inter += inter.value;
        b.skipped_edges += inter.skipped_edges;
    }
    b.total = compose_total(b, s.cfg);
    if (!grad) return b;

    grad->ref.assign(n, Point{});
    grad->tgt.assign(n, Point{});
    for (int v = 0; v < 2; ++v) {
        FlowField& dense = v == 0 ? g_ref : g_tgt;
        std::vector<Point>& out = v == 0 ? grad->ref : grad->tgt;
        // flow gradient -> design-matrix rows -> TPS coefficients -> offsets
        FlowField rows = s.backend == WarpBackend::Vanilla
                             ? std::move(dense)
                             : ffd_upsample_adjoint(dense, s.eval_mesh.rows, s.eval_mesh.cols, s.exec);
        const auto gc = s.backward(rows.dx, rows.dy);
        Eigen::MatrixX2d coef_grad(static_cast<Eigen::Index>(s.cols), 2);
        for (std::size_t k = 0; k < s.cols; ++k) {
            coef_grad(static_cast<Eigen::Index>(k), 0) = gc[0][k];
            coef_grad(static_cast<Eigen::Index>(k), 1) = gc[1][k];
        }
        const Eigen::MatrixX2d go = s.system->adjoint(coef_grad);

        const MeshVertices m = obj.mesh(v, v == 0 ? offsets.ref : offsets.tgt);
        const std::vector<Point> gi = intra_grid_grad(m, s.cfg);
        const std::vector<Point> ge = inter_grid_grad(m);
        for (std::size_t k = 0; k < n; ++k) {
            const auto kk = static_cast<Eigen::Index>(k);
            out[k].x = s.cfg.lambda_T * go(kk, 0) + s.cfg.w_s * (gi[k].x + ge[k].x);
            out[k].y = s.cfg.lambda_T * go(kk, 1) + s.cfg.w_s * (gi[k].y + ge[k].y);
        }
    }
    return b;
}

LossBreakdown StitchObjective::evaluate(const ViewOffsets& offsets) const { return run(offsets, nullptr); }

LossBreakdown StitchObjective::evaluate(const ViewOffsets& offsets, ViewOffsets& grad) const {
    return run(offsets, &grad);
}

LossBreakdown total_objective(const StitchObjective& objective, const ViewOffsets& offsets) {
    return objective.evaluate(offsets);
}

ViewOffsets objective_grad(const StitchObjective& objective, const ViewOffsets& offsets) {
    ViewOffsets g;
    objective.evaluate(offsets, g);
    return g;
}

std::string to_string(IntraMode m) { return m == IntraMode::AsWritten ? "as-written" : "prose"; }
std::string to_string(WarpBackend b) { return b == WarpBackend::Vanilla ? "vanilla" : "ffd"; }

IntraMode parse_intra_mode(const std::string& s) {
    if (s == "as-written") return IntraMode::AsWritten;
    if (s == "prose") return IntraMode::Prose;
    throw InputError("intra_mode must be as-written or prose, got '" + s + "'");
}

WarpBackend parse_backend(const std::string& s) {
    if (s == "vanilla") return WarpBackend::Vanilla;
    if (s == "ffd") return WarpBackend::Ffd;
    throw InputError("backend must be vanilla or ffd, got '" + s + "'");
}

}  // namespace warpforge
