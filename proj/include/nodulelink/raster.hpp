#pragma once

// 8-bit grayscale raster and binary PGM (P5) I/O.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "nodulelink/types.hpp"

namespace nodulelink {

class Raster {
public:
    Raster() = default;
    Raster(int width, int height, std::uint8_t fill = 0)
        : width_(width), height_(height),
          pixels_(static_cast<std::size_t>(checked_area(width, height)), fill) {}

    [[nodiscard]] int width() const { return width_; }
    [[nodiscard]] int height() const { return height_; }
    [[nodiscard]] bool empty() const { return pixels_.empty(); }

    [[nodiscard]] std::uint8_t at(int x, int y) const { return pixels_[index(x, y)]; }
    std::uint8_t& at(int x, int y) { return pixels_[index(x, y)]; }

    [[nodiscard]] bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

    /// Out-of-range reads return `outside`.
    [[nodiscard]] std::uint8_t get_or(int x, int y, std::uint8_t outside) const {
        return contains(x, y) ? at(x, y) : outside;
    }

    [[nodiscard]] std::span<const std::uint8_t> row(int y) const {
        return {pixels_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)};
    }
    [[nodiscard]] std::span<const std::uint8_t> pixels() const { return pixels_; }

    /// Copy of the rectangle [x, x+w) x [y, y+h); must lie inside the raster.
    [[nodiscard]] Raster crop(int x, int y, int w, int h) const {
        if (w <= 0 || h <= 0 || x < 0 || y < 0 || x + w > width_ || y + h > height_) {
            throw ValidationError("crop rectangle outside raster");
        }
        Raster out(w, h);
        for (int r = 0; r < h; ++r) {
            auto src = row(y + r).subspan(static_cast<std::size_t>(x), static_cast<std::size_t>(w));
            std::copy(src.begin(), src.end(), out.pixels_.begin() + static_cast<std::ptrdiff_t>(r) * w);
        }
        return out;
    }

    bool operator==(const Raster&) const = default;

private:
    static long checked_area(int w, int h) {
        if (w <= 0 || h <= 0) throw ValidationError("raster dimensions must be positive");
        return static_cast<long>(w) * h;
    }
    [[nodiscard]] std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> pixels_;
};

inline std::string encode_pgm(const Raster& img) {
    std::string out = "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
    auto px = img.pixels();
    out.append(reinterpret_cast<const char*>(px.data()), px.size());
    return out;
}

inline Raster decode_pgm(std::string_view data) {
    std::size_t pos = 0;
    auto skip_ws = [&] {
        while (pos < data.size()) {
            if (data[pos] == '#') {
                while (pos < data.size() && data[pos] != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(data[pos]))) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_int = [&]() -> long {
        skip_ws();
        long v = 0;
        std::size_t start = pos;
        while (pos < data.size() && data[pos] >= '0' && data[pos] <= '9') {
            v = v * 10 + (data[pos] - '0');
            if (v > 1'000'000) throw ValidationError("PGM header value too large");
            ++pos;
        }
        if (pos == start) throw ValidationError("malformed PGM header");
        return v;
    };
    if (data.size() < 2 || data[0] != 'P' || data[1] != '5') throw ValidationError("not a binary PGM (P5)");
    pos = 2;
    long w = read_int();
    long h = read_int();
    long maxval = read_int();
    if (maxval != 255) throw ValidationError("only 8-bit PGM supported");
    if (pos >= data.size() || !std::isspace(static_cast<unsigned char>(data[pos]))) {
        throw ValidationError("malformed PGM header");
    }
    ++pos;
    if (w <= 0 || h <= 0) throw ValidationError("PGM dimensions must be positive");
    if (data.size() - pos < static_cast<std::size_t>(w * h)) throw ValidationError("truncated PGM pixel data");
    Raster img(static_cast<int>(w), static_cast<int>(h));
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            img.at(x, y) = static_cast<std::uint8_t>(data[pos + static_cast<std::size_t>(y * w + x)]);
        }
    }
    return img;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Writes `contents`, creating missing parent directories.
inline void write_file(const std::filesystem::path& path, std::string_view contents) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create directory " + path.parent_path().string());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

inline Raster read_pgm(const std::filesystem::path& path) { return decode_pgm(read_file(path)); }
inline void write_pgm(const std::filesystem::path& path, const Raster& img) { write_file(path, encode_pgm(img)); }

}  // namespace nodulelink
