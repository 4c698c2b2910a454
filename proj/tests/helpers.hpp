#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "warpforge/imaging.hpp"
#include "warpforge/synthetic.hpp"

namespace testutil {

inline warpforge::Image random_image(int h, int w, int c, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    warpforge::Image img(h, w, c);
    for (double& v : img.data) v = warpforge::uniform01(rng);
    return img;
}

inline bool same_bits(const warpforge::FlowField& a, const warpforge::FlowField& b) {
    return a.height == b.height && a.width == b.width && a.dx == b.dx && a.dy == b.dy;
}

// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path = std::filesystem::temp_directory_path() / ("warpforge_" + tag + "_" + std::to_string(rd()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
};

}  // namespace testutil
