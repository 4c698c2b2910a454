#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace warpforge {

/// Channel-major grid of features: data[(c * grid_h + y) * grid_w + x].
struct FeatureMap {
    int channels = 0;
    int grid_h = 0;
    int grid_w = 0;
    std::vector<double> data;

    FeatureMap() = default;
    FeatureMap(int c, int h, int w, double fill = 0.0)
        : channels(c), grid_h(h), grid_w(w), data(static_cast<std::size_t>(c) * h * w, fill) {}

    std::size_t plane() const { return static_cast<std::size_t>(grid_h) * grid_w; }
    double& at(int c, int y, int x) { return data[(static_cast<std::size_t>(c) * grid_h + y) * grid_w + x]; }
    double at(int c, int y, int x) const { return data[(static_cast<std::size_t>(c) * grid_h + y) * grid_w + x]; }
    bool same_shape(const FeatureMap& o) const {
        return channels == o.channels && grid_h == o.grid_h && grid_w == o.grid_w;
    }
};

/// "WFM1", u32 channels, u32 grid_h, u32 grid_w, then f64 data (little endian).
FeatureMap read_feature_map(const std::filesystem::path& path);
void write_feature_map(const std::filesystem::path& path, const FeatureMap& map);

}  // namespace warpforge
