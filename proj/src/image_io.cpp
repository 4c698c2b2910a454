#include "warpforge/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include "warpforge/error.hpp"

namespace warpforge::io {

namespace {

static_assert(std::endian::native == std::endian::little, "WFF1 I/O assumes a little-endian host");

std::vector<unsigned char> slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

unsigned char to_byte(double v) {
    return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};

Image read_png(const std::filesystem::path& path) {
    std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw InputError("cannot open " + path.string());
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw InputError("corrupt PNG: " + path.string());
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);
    png_set_strip_16(png);
    png_set_packing(png);
    png_set_strip_alpha(png);
    const auto color = png_get_color_type(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
    png_read_update_info(png, info);
    const int w = static_cast<int>(png_get_image_width(png, info));
    const int h = static_cast<int>(png_get_image_height(png, info));
    const int ch = png_get_channels(png, info);
    std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h * ch);
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y) rows[y] = raw.data() + static_cast<std::size_t>(y) * w * ch;
    png_read_image(png, rows.data());
    png_destroy_read_struct(&png, &info, nullptr);

    if (ch != 1 && ch != 3) throw InputError("unsupported PNG channel layout in " + path.string());
    Image img(h, w, ch);
    for (std::size_t i = 0; i < raw.size(); ++i) img.data[i] = raw[i] / 255.0;
    return img;
}

Image read_pnm(const std::vector<unsigned char>& bytes, const std::string& name) {
    std::size_t pos = 2;
    auto next_token = [&]() -> long {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
        long v = 0;
        bool any = false;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            v = v * 10 + (bytes[pos++] - '0');
            any = true;
        }
        if (!any) throw InputError("malformed PNM header in " + name);
        return v;
    };
    const int ch = bytes[1] == '5' ? 1 : 3;
    const long w = next_token();
    const long h = next_token();
    const long maxval = next_token();
    ++pos;  // single whitespace before raster
    if (maxval <= 0 || maxval > 255) throw InputError("only 8-bit PNM supported: " + name);
    const std::size_t n = static_cast<std::size_t>(w) * h * ch;
    if (bytes.size() < pos + n) throw InputError("truncated PNM raster in " + name);
    Image img(static_cast<int>(h), static_cast<int>(w), ch);
    for (std::size_t i = 0; i < n; ++i) img.data[i] = bytes[pos + i] / static_cast<double>(maxval);
    return img;
}

}  // namespace

Image read_image(const std::filesystem::path& path) {
    const auto bytes = slurp(path);
    if (bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0) return read_png(path);
    if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6'))
        return read_pnm(bytes, path.string());
    throw InputError("unrecognized image format: " + path.string());
}

void write_png(const std::filesystem::path& path, const Image& img) {
    img.validate();
    std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw InputError("cannot write " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw InputError("PNG encode failed: " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, img.width, img.height, 8, img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<unsigned char> row(static_cast<std::size_t>(img.width) * img.channels);
    for (int y = 0; y < img.height; ++y) {
        for (std::size_t i = 0; i < row.size(); ++i) row[i] = to_byte(img.data[y * row.size() + i]);
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

void write_pnm(const std::filesystem::path& path, const Image& img) {
    img.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << (img.channels == 1 ? "P5" : "P6") << "\n" << img.width << " " << img.height << "\n255\n";
    std::vector<char> raw(img.data.size());
    std::transform(img.data.begin(), img.data.end(), raw.begin(), [](double v) { return static_cast<char>(to_byte(v)); });
    out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
}

void write_image(const std::filesystem::path& path, const Image& img) {
    if (path.extension() == ".png")
        write_png(path, img);
    else
        write_pnm(path, img);
}

Mask read_mask(const std::filesystem::path& path) {
    const Image img = to_gray(read_image(path));
    Mask m(img.height, img.width);
    m.data = img.data;
    return m;
}

void write_mask(const std::filesystem::path& path, const Mask& mask) {
    Image img(mask.height, mask.width, 1);
    img.data = mask.data;
    write_image(path, img);
}

FlowField read_flow(const std::filesystem::path& path) {
    const auto bytes = slurp(path);
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "WFF1", 4) != 0)
        throw InputError("not a WFF1 flow file: " + path.string());
    std::uint32_t h = 0;
    std::uint32_t w = 0;
    std::memcpy(&h, bytes.data() + 4, 4);
    std::memcpy(&w, bytes.data() + 8, 4);
    const std::size_t n = static_cast<std::size_t>(h) * w;
    if (bytes.size() != 12 + 8 * n) throw InputError("WFF1 payload size mismatch: " + path.string());
    FlowField flow(static_cast<int>(h), static_cast<int>(w));
    const unsigned char* p = bytes.data() + 12;
    for (std::size_t i = 0; i < n; ++i) {
        float v;
        std::memcpy(&v, p + 4 * i, 4);
        flow.dx[i] = v;
        std::memcpy(&v, p + 4 * (n + i), 4);
        flow.dy[i] = v;
    }
    flow.validate();
    return flow;
}

void write_flow(const std::filesystem::path& path, const FlowField& flow) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    const std::uint32_t h = static_cast<std::uint32_t>(flow.height);
    const std::uint32_t w = static_cast<std::uint32_t>(flow.width);
    out.write("WFF1", 4);
    out.write(reinterpret_cast<const char*>(&h), 4);
    out.write(reinterpret_cast<const char*>(&w), 4);
    for (const auto* field : {&flow.dx, &flow.dy}) {
        for (double d : *field) {
            const float v = static_cast<float>(d);
            out.write(reinterpret_cast<const char*>(&v), 4);
        }
    }
}

}  // namespace warpforge::io
