#include "warpforge/stitcher.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "warpforge/error.hpp"
#include "warpforge/npt.hpp"

namespace warpforge {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw InputError("config: '" + key + "' expects a number, got '" + v + "'");
    }
}

long long parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long long d = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw InputError("config: '" + key + "' expects an integer, got '" + v + "'");
    }
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string hex_le(const std::array<double, 9>& v) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (double d : v) {
        const auto bits = std::bit_cast<std::uint64_t>(d);
        for (int b = 0; b < 8; ++b) {
            const auto byte = static_cast<unsigned>((bits >> (8 * b)) & 0xffu);
            out += digits[byte >> 4];
            out += digits[byte & 0xf];
        }
    }
    return out;
}

json homography_json(const Homography& h) {
    const auto v = h.values();
    return {{"values", std::vector<double>(v.begin(), v.end())}, {"f64le_hex", hex_le(v)}};
}

json breakdown_json(const LossBreakdown& b) {
    return {{"align_H", b.align_H}, {"align_T", b.align_T}, {"shape_intra", b.shape_intra},
            {"shape_inter", b.shape_inter}, {"reg", b.reg}, {"total", b.total}, {"skipped_edges", b.skipped_edges}};
}

json metric_json(const MetricReport& m) {
    json j = {{"mssim", m.mssim}, {"mrmse", m.mrmse}, {"overlap_pixels", m.overlap_pixels}};
    if (std::isinf(m.mpsnr))
        j["mpsnr"] = "inf";
    else
        j["mpsnr"] = m.mpsnr;
    return j;
}

// Image-statistics stand-in for the semantic feature map, on the same grid
// rasterize produces at scale 1/16.
FeatureMap semantic_features(const Image& ref, const Image& tgt, int channels) {
    constexpr double kScale = 1.0 / 16.0;
    const int gh = std::max(1, static_cast<int>(std::floor(ref.height * kScale)));
    const int gw = std::max(1, static_cast<int>(std::floor(ref.width * kScale)));
    const Image gray = to_gray(ref);
    const Image gray_t = to_gray(tgt);
    constexpr int kStats = 8;
    std::vector<double> acc(static_cast<std::size_t>(gh) * gw * kStats, 0.0);
    std::vector<double> sq(static_cast<std::size_t>(gh) * gw, 0.0);
    std::vector<double> count(static_cast<std::size_t>(gh) * gw, 0.0);
    for (int y = 0; y < ref.height; ++y)
        for (int x = 0; x < ref.width; ++x) {
            const int cy = std::min(static_cast<int>(std::floor(y * kScale)), gh - 1);
            const int cx = std::min(static_cast<int>(std::floor(x * kScale)), gw - 1);
            const std::size_t cell = static_cast<std::size_t>(cy) * gw + cx;
            const double g = gray.at(y, x);
            double* a = acc.data() + cell * kStats;
            a[0] += g;
            a[1] += std::abs(gray.at(y, std::min(x + 1, ref.width - 1)) - g);
            a[2] += std::abs(gray.at(std::min(y + 1, ref.height - 1), x) - g);
            for (int c = 0; c < 3; ++c) a[3 + c] += ref.at(y, x, std::min(c, ref.channels - 1));
            a[6] += gray_t.at(y, x);
            a[7] += std::abs(gray_t.at(y, x) - g);
            sq[cell] += g * g;
            count[cell] += 1.0;
        }
    FeatureMap f(channels, gh, gw);
    for (std::size_t cell = 0; cell < count.size(); ++cell) {
        const double n = count[cell];
        std::array<double, kStats> s{};
        for (int k = 0; k < kStats; ++k) s[k] = acc[cell * kStats + k] / n;
        // replace the redundant blue mean by the local standard deviation
        s[5] = std::sqrt(std::max(0.0, sq[cell] / n - s[0] * s[0]));
        for (int c = 0; c < channels; ++c) f.data[static_cast<std::size_t>(c) * f.plane() + cell] = s[c % kStats];
    }
    return f;
}

FusionWeights fusion_weights(const StitchConfig& cfg, const Image& ref, const Image& tgt, const MatchSet& matches) {
    const int c = cfg.feature_channels;
    const FeatureMap f_s = semantic_features(ref, tgt, c);
    KeypointSet kp = matches.ref;
    kp.frame_w = ref.width;
    kp.frame_h = ref.height;
    // keypoints outside the frame carry no geometry for this frame
    KeypointSet inside;
    inside.frame_w = kp.frame_w;
    inside.frame_h = kp.frame_h;
    for (std::size_t i = 0; i < kp.points.size(); ++i) {
        const Point p = kp.points[i];
        if (p.x < 0 || p.y < 0 || p.x > ref.width - 1 || p.y > ref.height - 1) continue;
        inside.points.push_back(p);
        if (!kp.descriptors.empty()) inside.descriptors.push_back(kp.descriptors[i]);
    }
    FeatureMap f_g(c, f_s.grid_h, f_s.grid_w);
    if (!inside.points.empty())
        f_g = rasterize(encode_points(inside, c, cfg.seed), 1.0 / 16.0, ref.width, ref.height, Pooling::Max);
    return route(RouterParams::random(c, cfg.seed), f_s, f_g);
}

struct Canvas {
    int width = 0;
    int height = 0;
    Point origin;
};

Canvas canvas_for(const MiddlePlane& plane, int frame_w, int frame_h, int margin) {
    double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
    for (const Homography* h : {&plane.ref, &plane.tgt}) {
        const Homography inv = h->inverse();
        for (const Point& c : frame_corners(frame_w, frame_h)) {
            const auto m = inv.map(c);
            if (!m) throw NumericalFailure("stitch: a frame corner maps to infinity in the middle plane");
            x0 = std::min(x0, m->x);
            y0 = std::min(y0, m->y);
            x1 = std::max(x1, m->x);
            y1 = std::max(y1, m->y);
        }
    }
    Canvas c;
    c.origin = {std::floor(x0) - margin, std::floor(y0) - margin};
    c.width = static_cast<int>(std::ceil(x1) + margin - c.origin.x) + 1;
    c.height = static_cast<int>(std::ceil(y1) + margin - c.origin.y) + 1;
    constexpr long long kMaxPixels = 64LL << 20;
    if (static_cast<long long>(c.width) * c.height > kMaxPixels)
        throw NumericalFailure("stitch: canvas of " + std::to_string(c.width) + "x" + std::to_string(c.height) +
                               " is implausibly large; the homography is likely degenerate");
    return c;
}

double max_abs(const ViewOffsets& g) {
    double m = 0.0;
    for (const auto* v : {&g.ref, &g.tgt})
        for (const Point& p : *v) m = std::max({m, std::abs(p.x), std::abs(p.y)});
    return m;
}

ViewOffsets step_along(const ViewOffsets& x, const ViewOffsets& g, double scale) {
    ViewOffsets out = x;
    for (int v = 0; v < 2; ++v) {
        auto& o = v == 0 ? out.ref : out.tgt;
        const auto& d = v == 0 ? g.ref : g.tgt;
        for (std::size_t k = 0; k < o.size(); ++k) {
            o[k].x -= scale * d[k].x;
            o[k].y -= scale * d[k].y;
        }
    }
    return out;
}

}  // namespace

void StitchConfig::validate() const {
    loss.validate();
    if (!(step_size > 0.0)) throw InputError("config: step_size must be > 0");
    if (!(min_step > 0.0)) throw InputError("config: min_step must be > 0");
    if (max_iterations < 1) throw InputError("config: max_iterations must be >= 1");
    if (!(tolerance >= 0.0)) throw InputError("config: tolerance must be >= 0");
    if (!(ransac_threshold > 0.0)) throw InputError("config: ransac_threshold must be > 0");
    if (ransac_iterations < 1) throw InputError("config: ransac_iterations must be >= 1");
    if (canvas_margin < 0) throw InputError("config: canvas_margin must be >= 0");
    if (feature_channels < 1) throw InputError("config: feature_channels must be >= 1");
}

std::vector<std::string> config_keys() {
    return {"lambda_h",         "lambda_t",      "w_s",       "w_r",           "lambda_e",
            "alpha",            "grid_u",        "grid_v",    "intra_mode",    "ransac_threshold",
            "ransac_iterations", "step_size",    "min_step",  "max_iterations", "tolerance",
            "backend",          "points",        "seed",      "canvas_margin", "feature_channels",
            "max_matrix_bytes"};
}

void apply_setting(StitchConfig& cfg, const std::string& key, const std::string& raw) {
    const std::string v = trim(raw);
    auto as_int = [&] {
        const long long i = parse_int(key, v);
        if (i < std::numeric_limits<int>::min() || i > std::numeric_limits<int>::max())
            throw InputError("config: '" + key + "' out of range");
        return static_cast<int>(i);
    };
    if (key == "lambda_h") cfg.loss.lambda_H = parse_double(key, v);
    else if (key == "lambda_t") cfg.loss.lambda_T = parse_double(key, v);
    else if (key == "w_s") cfg.loss.w_s = parse_double(key, v);
    else if (key == "w_r") cfg.loss.w_r = parse_double(key, v);
    else if (key == "lambda_e") cfg.loss.lambda_e = parse_double(key, v);
    else if (key == "alpha") cfg.loss.alpha = parse_double(key, v);
    else if (key == "grid_u") cfg.loss.U = as_int();
    else if (key == "grid_v") cfg.loss.V = as_int();
    else if (key == "intra_mode") cfg.loss.intra_mode = parse_intra_mode(v);
    else if (key == "ransac_threshold") cfg.ransac_threshold = parse_double(key, v);
    else if (key == "ransac_iterations") cfg.ransac_iterations = as_int();
    else if (key == "step_size") cfg.step_size = parse_double(key, v);
    else if (key == "min_step") cfg.min_step = parse_double(key, v);
    else if (key == "max_iterations") cfg.max_iterations = as_int();
    else if (key == "tolerance") cfg.tolerance = parse_double(key, v);
    else if (key == "backend") cfg.backend = parse_backend(v);
    else if (key == "points") cfg.points = v;
    else if (key == "seed") {
        const long long s = parse_int(key, v);
        if (s < 0) throw InputError("config: seed must be >= 0");
        cfg.seed = static_cast<std::uint64_t>(s);
    } else if (key == "canvas_margin") cfg.canvas_margin = as_int();
    else if (key == "feature_channels") cfg.feature_channels = as_int();
    else if (key == "max_matrix_bytes") {
        const long long b = parse_int(key, v);
        if (b < 0) throw InputError("config: max_matrix_bytes must be >= 0");
        cfg.vanilla.max_matrix_bytes = static_cast<std::size_t>(b);
    } else
        throw InputError("config: unknown key '" + key + "'");
}

void load_config_file(StitchConfig& cfg, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file " + path.string());
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw InputError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
        apply_setting(cfg, trim(t.substr(0, eq)), t.substr(eq + 1));
    }
}

std::map<std::string, std::string> config_echo(const StitchConfig& cfg) {
    return {{"lambda_h", num(cfg.loss.lambda_H)},
            {"lambda_t", num(cfg.loss.lambda_T)},
            {"w_s", num(cfg.loss.w_s)},
            {"w_r", num(cfg.loss.w_r)},
            {"lambda_e", num(cfg.loss.lambda_e)},
            {"alpha", num(cfg.loss.alpha)},
            {"grid_u", std::to_string(cfg.loss.U)},
            {"grid_v", std::to_string(cfg.loss.V)},
            {"intra_mode", to_string(cfg.loss.intra_mode)},
            {"ransac_threshold", num(cfg.ransac_threshold)},
            {"ransac_iterations", std::to_string(cfg.ransac_iterations)},
            {"step_size", num(cfg.step_size)},
            {"min_step", num(cfg.min_step)},
            {"max_iterations", std::to_string(cfg.max_iterations)},
            {"tolerance", num(cfg.tolerance)},
            {"backend", to_string(cfg.backend)},
            {"points", cfg.points},
            {"seed", std::to_string(cfg.seed)},
            {"canvas_margin", std::to_string(cfg.canvas_margin)},
            {"feature_channels", std::to_string(cfg.feature_channels)},
            {"max_matrix_bytes", std::to_string(cfg.vanilla.max_matrix_bytes)}};
}

std::string RunReport::to_json(bool include_timing) const {
    json j;
    j["homography"] = homography_json(fitted);
    j["h_ref"] = homography_json(plane.ref);
    j["h_tgt"] = homography_json(plane.tgt);
    json corners = json::array();
    for (const Point& o : offsets.offsets) corners.push_back({o.x, o.y});
    j["four_point_offsets"] = corners;
    j["correspondences"] = correspondences;
    j["inliers"] = inliers;
    j["fusion_weights"] = {{"semantic", fusion.s}, {"geometric", fusion.g}, {"heterogeneous", fusion.h}};
    json tr = json::array();
    for (const TraceEntry& e : trace) {
        json row = breakdown_json(e.loss);
        row["iteration"] = e.iteration;
        row["step"] = e.step;
        tr.push_back(row);
    }
    j["trace"] = tr;
    j["stop_reason"] = stop_reason;
    j["metrics"] = {{"homography_stage", metric_json(metrics.homography)}, {"final", metric_json(metrics.final)}};
    j["canvas"] = {{"width", canvas_width}, {"height", canvas_height}, {"origin", {canvas_origin.x, canvas_origin.y}}};
    if (include_timing) {
        json t = json::object();
        for (const auto& [name, ms] : stage_ms) t[name] = ms;
        j["stage_ms"] = t;
    }
    j["config"] = config;
    j["conventions"] = {
        {"corner_order", "TL, TR, BL, BR at (0,0), (W-1,0), (0,H-1), (W-1,H-1)"},
        {"homography_direction", "maps reference pixels to target pixels; h_ref and h_tgt map middle-plane "
                                 "pixels into each image, homography * h_ref = h_tgt"},
        {"homography_serialization", "row-major, h33 = 1; hex is 9 little-endian f64"},
        {"alignment_normalization", "mean over canvas pixels and channels, masked pixels contribute 0"},
        {"shape_loss", "each view's control mesh penalized independently and summed"},
        {"canvas", "middle-plane pixel (x, y) sits at canvas (x - origin.x, y - origin.y)"}};
    return j.dump(2) + "\n";
}

StitchResult stitch(const StitchConfig& cfg, const Image& ref, const Image& tgt, const MatchSet& matches) {
    cfg.validate();
    ref.validate();
    tgt.validate();
    if (ref.height != tgt.height || ref.width != tgt.width || ref.channels != tgt.channels)
        throw InputError("stitch: reference and target images must share size and channel count");
    if (matches.pairs.size() < 4)
        throw InputError("need ≥ 4 correspondences, got " + std::to_string(matches.pairs.size()));

    StitchResult out;
    RunReport& rep = out.report;
    rep.config = config_echo(cfg);
    rep.correspondences = matches.pairs.size();
    const int w = ref.width;
    const int h = ref.height;

    auto t0 = Clock::now();
    const RansacResult fit = ransac_fit(matches.pairs, cfg.ransac_threshold, cfg.ransac_iterations, cfg.seed);
    rep.fitted = fit.model;
    rep.inliers = fit.inliers.size();
    rep.offsets = homography_to_offsets(fit.model, w, h);
    rep.stage_ms.emplace_back("homography", ms_since(t0));

    t0 = Clock::now();
    rep.plane = decompose_middle_plane(rep.offsets);
    const Canvas canvas = canvas_for(rep.plane, w, h, cfg.canvas_margin);
    rep.canvas_width = canvas.width;
    rep.canvas_height = canvas.height;
    rep.canvas_origin = canvas.origin;
    rep.fusion = fusion_weights(cfg, ref, tgt, matches);
    rep.stage_ms.emplace_back("decompose", ms_since(t0));

    t0 = Clock::now();
    const ObjectiveWindow window{canvas.width, canvas.height, canvas.origin};
    const StitchObjective objective(ref, tgt, rep.plane, rep.fusion, cfg.loss, cfg.backend, window, Exec::Parallel,
                                    cfg.vanilla);
    ViewOffsets x = objective.initial_offsets();
    ViewOffsets g;
    LossBreakdown cur = objective.evaluate(x, g);
    if (!std::isfinite(cur.total)) throw NumericalFailure("stitch: objective is not finite at the initial warp");
    const double initial = cur.total;
    rep.trace.push_back({0, 0.0, cur});
    // only align_T and the shape terms depend on the offsets, and both are >= 0
    auto variable_part = [&](const LossBreakdown& b) {
        return cfg.loss.lambda_T * b.align_T + cfg.loss.w_s * (b.shape_intra + b.shape_inter);
    };
    double step = cfg.step_size;
    rep.stop_reason = "iteration cap";
    for (int it = 1; it <= cfg.max_iterations; ++it) {
        if (variable_part(cur) <= cfg.tolerance * std::abs(cur.total)) {
            rep.stop_reason = "converged: remaining decrease below tolerance";
            break;
        }
        const double gmax = max_abs(g);
        if (gmax == 0.0) {
            rep.stop_reason = "converged: zero gradient";
            break;
        }
        bool accepted = false;
        ViewOffsets trial;
        LossBreakdown next;
        while (step >= cfg.min_step) {
            trial = step_along(x, g, step / gmax);
            next = objective.evaluate(trial);
            if (!std::isfinite(next.total)) throw NumericalFailure("stitch: objective became non-finite");
            if (next.total < cur.total) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            rep.stop_reason = "converged: no decrease above the minimum step";
            break;
        }
        if (next.total > initial + 9.0 * std::abs(initial))
            throw NumericalFailure("stitch: optimizer diverged (total exceeds 10x its initial value)");
        const double rel = (cur.total - next.total) / std::max(std::abs(cur.total), 1e-300);
        x = std::move(trial);
        cur = objective.evaluate(x, g);
        rep.trace.push_back({it, step, cur});
        if (rel < cfg.tolerance) {
            rep.stop_reason = "converged: relative change below tolerance";
            break;
        }
        step *= 2.0;
    }
    rep.stage_ms.emplace_back("optimize", ms_since(t0));

    t0 = Clock::now();
    const double ox = canvas.origin.x;
    const double oy = canvas.origin.y;
    const Warped h_ref = remap(ref, objective.homography_flow(0), ox, oy);
    const Warped h_tgt = remap(tgt, objective.homography_flow(1), ox, oy);
    out.flow_ref = objective.tps_flow(0, x.ref);
    out.flow_tgt = objective.tps_flow(1, x.tgt);
    out.ref = remap(ref, out.flow_ref, ox, oy);
    out.tgt = remap(tgt, out.flow_tgt, ox, oy);
    out.panorama = average_fuse(out.ref.image, threshold_mask(out.ref.mask), out.tgt.image,
                                threshold_mask(out.tgt.mask));
    rep.stage_ms.emplace_back("warp", ms_since(t0));

    t0 = Clock::now();
    rep.metrics.homography = evaluate_pair(h_ref.image, h_tgt.image, overlap_mask(h_ref.mask, h_tgt.mask));
    rep.metrics.final = evaluate_pair(out.ref.image, out.tgt.image, overlap_mask(out.ref.mask, out.tgt.mask));
    rep.stage_ms.emplace_back("metrics", ms_since(t0));
    return out;
}

Image procedural_texture(int height, int width, std::uint64_t seed, int channels) {
    if (height < 1 || width < 1) throw ContractViolation("procedural_texture: empty size");
    if (channels != 1 && channels != 3) throw ContractViolation("procedural_texture: channels must be 1 or 3");
    std::mt19937_64 rng(seed);
    struct Wave {
        double kx, ky, phase, amp;
        std::array<double, 3> tint;
    };
    struct Blob {
        double x, y, r, amp;
        std::array<double, 3> tint;
    };
    const double tau = 2.0 * std::numbers::pi;
    std::vector<Wave> waves;
    for (int i = 0; i < 12; ++i) {
        const double wavelength = uniform(rng, 20.0, 80.0);
        const double angle = uniform(rng, 0.0, std::numbers::pi);
        Wave wv{tau * std::cos(angle) / wavelength, tau * std::sin(angle) / wavelength, uniform(rng, 0.0, tau),
                uniform(rng, 0.3, 1.0), {}};
        for (double& t : wv.tint) t = uniform(rng, 0.5, 1.0);
        waves.push_back(wv);
    }
    std::vector<Blob> blobs;
    for (int i = 0; i < 24; ++i) {
        Blob b{uniform(rng, 0.0, width), uniform(rng, 0.0, height), uniform(rng, 8.0, 30.0), uniform(rng, -1.0, 1.0),
               {}};
        for (double& t : b.tint) t = uniform(rng, 0.5, 1.0);
        blobs.push_back(b);
    }
    Image img(height, width, channels);
    double lo = 1e300, hi = -1e300;
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            for (int c = 0; c < channels; ++c) {
                double v = 0.0;
                for (const Wave& wv : waves) v += wv.amp * wv.tint[c] * std::sin(wv.kx * x + wv.ky * y + wv.phase);
                for (const Blob& b : blobs) {
                    const double d2 = (x - b.x) * (x - b.x) + (y - b.y) * (y - b.y);
                    v += 2.0 * b.amp * b.tint[c] * std::exp(-0.5 * d2 / (b.r * b.r));
                }
                img.at(y, x, c) = v;
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
    const double span = hi > lo ? hi - lo : 1.0;
    for (double& v : img.data) v = 0.05 + 0.9 * (v - lo) / span;
    return img;
}

SyntheticPair generate_synthetic_pair(const Image& base, std::uint64_t seed, double homography_magnitude,
                                      double tps_magnitude) {
    base.validate();
    if (base.height <= 128 || base.width <= 128) throw InputError("synth: base image must be larger than 128x128");
    if (homography_magnitude < 0.0 || tps_magnitude < 0.0) throw InputError("synth: magnitudes must be >= 0");
    const int my = base.height / 8;
    const int mx = base.width / 8;
    const int fh = base.height - 2 * my;
    const int fw = base.width - 2 * mx;

    SyntheticPair pair;
    pair.warp = make_synthetic_warp(seed, fw, fh, homography_magnitude, tps_magnitude);
    const SyntheticWarp& warp = pair.warp;
    // the quad must stay convex and non-degenerate
    {
        const auto c = frame_corners(fw, fh);
        std::array<Point, 4> q;
        for (int i = 0; i < 4; ++i) {
            const auto m = warp.homography.map(c[i]);
            if (!m) throw InputError("synth: magnitudes produce a degenerate quad");
            q[i] = *m;
        }
        const std::array<int, 4> ring{0, 1, 3, 2};
        double sign = 0.0;
        for (int i = 0; i < 4; ++i) {
            const Point a = q[ring[i]], b = q[ring[(i + 1) % 4]], d = q[ring[(i + 2) % 4]];
            const double cross = (b.x - a.x) * (d.y - b.y) - (b.y - a.y) * (d.x - b.x);
            if (std::abs(cross) < 1e-9 || (sign != 0.0 && cross * sign < 0.0))
                throw InputError("synth: magnitudes produce a degenerate quad");
            sign = cross;
        }
    }
    pair.generator = warp.homography.inverse();

    // residual as a 13x13 TPS over the frame
    ControlGrid grid = ControlGrid::uniform(12, 12, fw, fh);
    for (std::size_t k = 0; k < grid.count(); ++k) grid.offsets[k] = warp.residual(grid.source[k]);
    const TpsSolution residual = tps_fit(grid);
    auto generator = [&](Point p) {
        const auto hp = warp.homography.map(p);
        if (!hp) throw InputError("synth: magnitudes produce a degenerate quad");
        const Point r = residual.displacement(p);
        return Point{hp->x + r.x, hp->y + r.y};
    };

    pair.ref = Image(fh, fw, base.channels);
    pair.tgt = Image(fh, fw, base.channels);
    pair.truth = FlowField(fh, fw);
    for (int y = 0; y < fh; ++y)
        for (int x = 0; x < fw; ++x) {
            for (int c = 0; c < base.channels; ++c) pair.ref.at(y, x, c) = base.at(y + my, x + mx, c);
            const Point g = generator({static_cast<double>(x), static_cast<double>(y)});
            const Sample s = bilinear_sample(base, g.x + mx, g.y + my);
            if (!s.in_bounds) throw InputError("synth: magnitudes move the frame outside the base image");
            for (int c = 0; c < base.channels; ++c) pair.tgt.at(y, x, c) = s.values[c];
            const std::size_t i = pair.truth.index(y, x);
            pair.truth.dx[i] = g.x - x;
            pair.truth.dy[i] = g.y - y;
        }

    // matches on a regular lattice of the target frame, kept when the
    // reference position lies inside the reference frame
    constexpr int kLattice = 16;
    for (int i = 0; i <= kLattice; ++i)
        for (int j = 0; j <= kLattice; ++j) {
            const Point p{(fw - 1.0) * j / kLattice, (fh - 1.0) * i / kLattice};
            const Point g = generator(p);
            if (g.x < 0.0 || g.y < 0.0 || g.x > fw - 1.0 || g.y > fh - 1.0) continue;
            pair.matches.ref.points.push_back(g);
            pair.matches.tgt.points.push_back(p);
            pair.matches.pairs.push_back({g, p});
        }
    pair.matches.ref.frame_w = pair.matches.tgt.frame_w = fw;
    pair.matches.ref.frame_h = pair.matches.tgt.frame_h = fh;
    return pair;
}

}  // namespace warpforge
