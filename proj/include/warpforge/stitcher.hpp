#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "warpforge/amoe.hpp"
#include "warpforge/evaluation.hpp"
#include "warpforge/homography.hpp"
#include "warpforge/match_file.hpp"
#include "warpforge/objective.hpp"
#include "warpforge/synthetic.hpp"

namespace warpforge {

struct StitchConfig {
    LossConfig loss{.intra_mode = IntraMode::Prose};
    double ransac_threshold = 8.0;  // px
    int ransac_iterations = 1000;
    double step_size = 1.0;  // initial largest per-offset move, px
    double min_step = 1e-3;  // px; backtracking gives up below this
    int max_iterations = 500;
    double tolerance = 1e-6;  // relative change of the total
    WarpBackend backend = WarpBackend::Ffd;
    std::string points;  // match file path (CLI only)
    std::uint64_t seed = 0;
    int canvas_margin = 8;  // px around the union of the homography-warped frames
    int feature_channels = 8;
    TpsEvalOptions vanilla;

    void validate() const;
};

/// Applies `key = value` settings (snake_case field names, loss fields
/// unprefixed). Throws InputError on unknown keys or bad values.
void apply_setting(StitchConfig& cfg, const std::string& key, const std::string& value);
void load_config_file(StitchConfig& cfg, const std::filesystem::path& path);

/// Every configurable key in apply_setting order.
std::vector<std::string> config_keys();
std::map<std::string, std::string> config_echo(const StitchConfig& cfg);

struct TraceEntry {
    int iteration = 0;
    double step = 0.0;
    LossBreakdown loss;
};

struct StageMetrics {
    MetricReport homography;  // homography-only warps
    MetricReport final;
};

struct RunReport {
    Homography fitted;  // ref -> tgt
    FourPtOffsets offsets;
    MiddlePlane plane;
    std::size_t inliers = 0;
    std::size_t correspondences = 0;
    FusionWeights fusion;
    std::vector<TraceEntry> trace;
    std::string stop_reason;
    StageMetrics metrics;
    int canvas_width = 0;
    int canvas_height = 0;
    Point canvas_origin;
    std::vector<std::pair<std::string, double>> stage_ms;
    std::map<std::string, std::string> config;

    /// JSON document; homographies carry both decimal values and the
    /// bit-exact little-endian f64 hex.
    std::string to_json(bool include_timing = true) const;
};

struct StitchResult {
    Image panorama;
    Warped ref;  // on the canvas
    Warped tgt;
    FlowField flow_ref;  // canvas flows, sampling at q + origin + flow
    FlowField flow_tgt;
    RunReport report;
};

StitchResult stitch(const StitchConfig& cfg, const Image& ref, const Image& tgt, const MatchSet& matches);

/// Smooth random texture (sinusoids plus blobs) in [0,1].
Image procedural_texture(int height, int width, std::uint64_t seed, int channels = 3);

struct SyntheticPair {
    Image ref;
    Image tgt;
    FlowField truth;  // on the tgt frame: tgt(p) = ref(p + truth(p))
    MatchSet matches;
    Homography generator;  // homography part of the generator, ref -> tgt
    SyntheticWarp warp;
};

/// The frame is the base interior minus a margin of 1/8 of each dimension.
/// ref is the frame crop; tgt(p) = base(G(p) + margin) with G = the seeded
/// homography followed by a 13x13 TPS residual, so (G(p), p) are exact
/// matches. Magnitudes are fractions of the frame size (homography) and of
/// the frame diagonal (residual peak).
SyntheticPair generate_synthetic_pair(const Image& base, std::uint64_t seed, double homography_magnitude,
                                      double tps_magnitude);

}  // namespace warpforge
