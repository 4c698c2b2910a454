#pragma once

// Small objective and mesh problems shared by the unit and acceptance tests.

#include <cstdint>
#include <random>

#include "warpforge/amoe.hpp"
#include "warpforge/homography.hpp"
#include "warpforge/objective.hpp"
#include "warpforge/stitcher.hpp"

namespace fixture {

using namespace warpforge;

inline MeshVertices uniform_mesh(int U, int V, double w, double h, double sx, double sy) {
    MeshVertices m{U, V, w, h, {}};
    for (int i = 0; i <= U; ++i)
        for (int j = 0; j <= V; ++j) m.vertices.push_back({j * sx, i * sy});
    return m;
}

inline MeshVertices jittered_mesh(int U, int V, double w, double h, double amp, std::uint64_t seed) {
    auto m = uniform_mesh(U, V, w, h, (w - 1) / V, (h - 1) / U);
    std::mt19937_64 rng(seed);
    for (auto& p : m.vertices) p = {p.x + uniform(rng, -amp, amp), p.y + uniform(rng, -amp, amp)};
    return m;
}

inline FeatureMap random_map(int c, int h, int w, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    FeatureMap m(c, h, w);
    for (double& v : m.data) v = uniform(rng, -1, 1);
    return m;
}

inline FourPtOffsets random_offsets(std::mt19937_64& rng, int w, int h, double frac) {
    FourPtOffsets o;
    o.frame_w = w;
    o.frame_h = h;
    for (auto& p : o.offsets) p = {uniform(rng, -frac, frac) * w, uniform(rng, -frac, frac) * h};
    return o;
}

inline Image shifted_levels(const Image& img, double scale, double offset) {
    Image out = img;
    for (double& v : out.data) v = offset + scale * v;
    return out;
}

// Smooth pair whose difference keeps one sign everywhere, so the L1 term is
// differentiable and finite differences are meaningful.
struct SmoothPair {
    Image ref, tgt;
};

inline SmoothPair smooth_pair(int n, std::uint64_t seed) {
    Image a = gaussian_blur(procedural_texture(n, n, seed, 1), 3.0);
    Image b = gaussian_blur(procedural_texture(n, n, seed + 1, 1), 3.0);
    return {shifted_levels(a, 0.4, 0.0), shifted_levels(b, 0.4, 0.55)};
}

inline StitchObjective inset_objective(const SmoothPair& p, WarpBackend backend, LossConfig cfg,
                                       Exec exec = Exec::Parallel) {
    const int n = p.ref.width;
    ObjectiveWindow win{n - 16, n - 16, {8, 8}};
    return StitchObjective(p.ref, p.tgt, MiddlePlane{}, FusionWeights{}, cfg, backend, win, exec);
}

inline ViewOffsets jitter(ViewOffsets o, double amp, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (auto* v : {&o.ref, &o.tgt})
        for (auto& p : *v) p = {p.x + uniform(rng, -amp, amp), p.y + uniform(rng, -amp, amp)};
    return o;
}

inline double& coord(ViewOffsets& o, std::size_t k) {
    const std::size_t n = o.ref.size();
    Point& p = k / 2 < n ? o.ref[k / 2] : o.tgt[k / 2 - n];
    return k % 2 ? p.y : p.x;
}

}  // namespace fixture
