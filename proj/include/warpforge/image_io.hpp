#pragma once

#include <filesystem>

#include "warpforge/imaging.hpp"

namespace warpforge::io {

/// Loads PNG (8-bit gray/RGB/RGBA, alpha dropped) or binary PGM/PPM, detected
/// by magic bytes. Intensities are scaled to [0,1] by 1/255.
Image read_image(const std::filesystem::path& path);

/// 8-bit PNG; values are clamped to [0,1] and rounded.
void write_png(const std::filesystem::path& path, const Image& img);

/// Binary P5 (1 channel) or P6 (3 channels), maxval 255.
void write_pnm(const std::filesystem::path& path, const Image& img);

/// Dispatches on extension: .png, otherwise PNM.
void write_image(const std::filesystem::path& path, const Image& img);

/// Mask stored as a single-channel image.
Mask read_mask(const std::filesystem::path& path);
void write_mask(const std::filesystem::path& path, const Mask& mask);

/// WFF1: "WFF1", u32 height, u32 width, H*W f32 dx, H*W f32 dy, little endian.
FlowField read_flow(const std::filesystem::path& path);
void write_flow(const std::filesystem::path& path, const FlowField& flow);

}  // namespace warpforge::io
