#include "warpforge/npt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <string>

#include "warpforge/error.hpp"
#include "warpforge/synthetic.hpp"

namespace warpforge {

void KeypointSet::validate() const {
    const int d = descriptor_dim();
    if (!descriptors.empty() && descriptors.size() != points.size())
        throw ContractViolation("keypoints: descriptor count differs from point count");
    for (const auto& desc : descriptors)
        if (static_cast<int>(desc.size()) != d) throw ContractViolation("keypoints: ragged descriptors");
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& p = points[i];
        if (!(p.x >= 0.0 && p.x < frame_w && p.y >= 0.0 && p.y < frame_h))
            throw ContractViolation("keypoints: point " + std::to_string(i) + " lies outside the frame");
    }
}

PointFeatureSet encode_points(const KeypointSet& kp, int channels, std::uint64_t seed) {
    if (kp.points.empty()) throw ContractViolation("encode_points: empty keypoint set");
    if (channels < 1) throw ContractViolation("encode_points: channels must be positive");
    kp.validate();
    const int in = 2 + kp.descriptor_dim();
    std::mt19937_64 rng(seed);
    const double gain = std::sqrt(3.0 / in);
    std::vector<double> weight(static_cast<std::size_t>(channels) * in);
    std::vector<double> bias(channels);
    for (double& w : weight) w = uniform(rng, -gain, gain);
    for (double& b : bias) b = uniform(rng, -0.5, 0.5);

    PointFeatureSet out;
    out.channels = channels;
    out.coords = kp.points;
    out.features.reserve(kp.points.size());
    std::vector<double> z(in);
    for (std::size_t i = 0; i < kp.points.size(); ++i) {
        z[0] = kp.points[i].x / kp.frame_w;
        z[1] = kp.points[i].y / kp.frame_h;
        for (int k = 2; k < in; ++k) z[k] = kp.descriptors[i][k - 2];
        std::vector<double> f(channels);
        for (int c = 0; c < channels; ++c) {
            double a = bias[c];
            for (int k = 0; k < in; ++k) a += weight[static_cast<std::size_t>(c) * in + k] * z[k];
            f[c] = std::tanh(a);
        }
        out.features.push_back(std::move(f));
    }
    return out;
}

FeatureMap rasterize(const PointFeatureSet& pf, double scale, int frame_w, int frame_h, Pooling pooling) {
    if (pf.features.size() != pf.coords.size()) throw ContractViolation("rasterize: feature/coord count mismatch");
    if (!(scale > 0.0)) throw ContractViolation("rasterize: scale must be positive");
    const int gh = static_cast<int>(std::floor(frame_h * scale));
    const int gw = static_cast<int>(std::floor(frame_w * scale));
    if (gh < 1 || gw < 1) throw ContractViolation("rasterize: frame too small for scale");
    FeatureMap map(pf.channels, gh, gw);

    std::vector<std::pair<std::size_t, std::size_t>> keyed;  // (cell, point)
    keyed.reserve(pf.coords.size());
    for (std::size_t i = 0; i < pf.coords.size(); ++i) {
        const Point p = pf.coords[i];
        if (!(p.x >= 0.0 && p.x < frame_w && p.y >= 0.0 && p.y < frame_h))
            throw ContractViolation("rasterize: point " + std::to_string(i) + " lies outside the frame");
        if (static_cast<int>(pf.features[i].size()) != pf.channels)
            throw ContractViolation("rasterize: feature " + std::to_string(i) + " has wrong channel count");
        const int cx = std::min(static_cast<int>(std::floor(p.x * scale)), gw - 1);
        const int cy = std::min(static_cast<int>(std::floor(p.y * scale)), gh - 1);
        keyed.emplace_back(static_cast<std::size_t>(cy) * gw + cx, i);
    }
    std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

    std::vector<double> column;
    for (std::size_t begin = 0; begin < keyed.size();) {
        std::size_t end = begin;
        while (end < keyed.size() && keyed[end].first == keyed[begin].first) ++end;
        const std::size_t cell = keyed[begin].first;
        for (int c = 0; c < pf.channels; ++c) {
            column.clear();
            for (std::size_t k = begin; k < end; ++k) column.push_back(pf.features[keyed[k].second][c]);
            std::sort(column.begin(), column.end());
            double v = 0.0;
            if (pooling == Pooling::Max) {
                v = column.back();
            } else {
                for (double x : column) v += x;
                if (pooling == Pooling::Mean) v /= static_cast<double>(column.size());
            }
            map.data[static_cast<std::size_t>(c) * map.plane() + cell] = v;
        }
        begin = end;
    }
    return map;
}

FeatureMap read_feature_map(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    char magic[4];
    std::uint32_t dims[3];
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(dims), sizeof(dims));
    if (!in || std::string(magic, 4) != "WFM1") throw InputError("not a WFM1 feature map: " + path.string());
    FeatureMap m(static_cast<int>(dims[0]), static_cast<int>(dims[1]), static_cast<int>(dims[2]));
    in.read(reinterpret_cast<char*>(m.data.data()), static_cast<std::streamsize>(m.data.size() * sizeof(double)));
    if (!in) throw InputError("truncated WFM1 payload: " + path.string());
    return m;
}

void write_feature_map(const std::filesystem::path& path, const FeatureMap& map) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    const std::uint32_t dims[3] = {static_cast<std::uint32_t>(map.channels), static_cast<std::uint32_t>(map.grid_h),
                                   static_cast<std::uint32_t>(map.grid_w)};
    out.write("WFM1", 4);
    out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    out.write(reinterpret_cast<const char*>(map.data.data()), static_cast<std::streamsize>(map.data.size() * sizeof(double)));
}

}  // namespace warpforge
