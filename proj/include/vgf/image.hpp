// ----------------------------------------------------------------------------
// Copyright 2026 The vgf authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ----------------------------------------------------------------------------

#ifndef VGF_IMAGE_HPP
#define VGF_IMAGE_HPP

#include <array>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "vgf/errors.hpp"
#include "vgf/tensor.hpp"

namespace vgf {

namespace detail {

inline std::uint32_t crc32(const unsigned char* data, std::size_t len, std::uint32_t crc = 0) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    crc ^= 0xFFFFFFFFu;
    for (std::size_t i = 0; i < len; ++i) crc = table[(crc ^ data[i]) & 0xFF] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
}

inline std::uint32_t adler32(const unsigned char* data, std::size_t len) {
    std::uint32_t a = 1, b = 0;
    for (std::size_t i = 0; i < len; ++i) {
        a = (a + data[i]) % 65521u;
        b = (b + a) % 65521u;
    }
    return (b << 16) | a;
}

inline void put_be32(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back(static_cast<unsigned char>(v >> 24));
    out.push_back(static_cast<unsigned char>(v >> 16));
    out.push_back(static_cast<unsigned char>(v >> 8));
    out.push_back(static_cast<unsigned char>(v));
}

inline void write_chunk(std::ofstream& os, const char type[4], const std::vector<unsigned char>& data) {
    std::vector<unsigned char> head;
    put_be32(head, static_cast<std::uint32_t>(data.size()));
    os.write(reinterpret_cast<const char*>(head.data()), 4);
    std::vector<unsigned char> body(type, type + 4);
    body.insert(body.end(), data.begin(), data.end());
    os.write(reinterpret_cast<const char*>(body.data()), static_cast<std::streamsize>(body.size()));
    std::vector<unsigned char> crc;
    put_be32(crc, crc32(body.data(), body.size()));
    os.write(reinterpret_cast<const char*>(crc.data()), 4);
}

}  // namespace detail

/// Minimal PNG writer: 8-bit grayscale or RGB, zlib stream of stored deflate
/// blocks. Output is byte-deterministic.
inline void write_png(const std::string& path, std::size_t width, std::size_t height, std::size_t channels,
                      const std::vector<unsigned char>& pixels) {
    if (channels != 1 && channels != 3) throw std::invalid_argument("png: only grayscale or rgb");
    if (pixels.size() != width * height * channels) throw std::invalid_argument("png: pixel buffer size mismatch");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("png: cannot open " + path + " for writing");

    static const unsigned char sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
    os.write(reinterpret_cast<const char*>(sig), 8);

    std::vector<unsigned char> ihdr;
    detail::put_be32(ihdr, static_cast<std::uint32_t>(width));
    detail::put_be32(ihdr, static_cast<std::uint32_t>(height));
    ihdr.push_back(8);                                         // bit depth
    ihdr.push_back(channels == 1 ? 0 : 2);                     // color type
    ihdr.insert(ihdr.end(), {0, 0, 0});                        // deflate, adaptive, no interlace
    detail::write_chunk(os, "IHDR", ihdr);

    // raw stream: each scanline prefixed with filter byte 0
    std::vector<unsigned char> raw;
    raw.reserve(height * (1 + width * channels));
    for (std::size_t y = 0; y < height; ++y) {
        raw.push_back(0);
        raw.insert(raw.end(), pixels.begin() + static_cast<std::ptrdiff_t>(y * width * channels),
                   pixels.begin() + static_cast<std::ptrdiff_t>((y + 1) * width * channels));
    }

    std::vector<unsigned char> idat{0x78, 0x01};  // zlib header, no compression preset
    std::size_t off = 0;
    while (off < raw.size() || raw.empty()) {
        std::size_t block = std::min<std::size_t>(65535, raw.size() - off);
        bool final = off + block == raw.size();
        idat.push_back(final ? 1 : 0);
        idat.push_back(static_cast<unsigned char>(block & 0xFF));
        idat.push_back(static_cast<unsigned char>(block >> 8));
        idat.push_back(static_cast<unsigned char>(~block & 0xFF));
        idat.push_back(static_cast<unsigned char>((~block >> 8) & 0xFF));
        idat.insert(idat.end(), raw.begin() + static_cast<std::ptrdiff_t>(off),
                    raw.begin() + static_cast<std::ptrdiff_t>(off + block));
        off += block;
        if (final || raw.empty()) break;
    }
    detail::put_be32(idat, detail::adler32(raw.data(), raw.size()));
    detail::write_chunk(os, "IDAT", idat);
    detail::write_chunk(os, "IEND", {});
    if (!os) throw IoError("png: write failed for " + path);
}

struct PngInfo {
    std::size_t width = 0;
    std::size_t height = 0;
    int bit_depth = 0;
    int color_type = 0;
};

inline PngInfo read_png_info(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("png: cannot open " + path);
    unsigned char head[33];
    is.read(reinterpret_cast<char*>(head), 33);
    if (!is || head[1] != 'P' || head[2] != 'N' || head[3] != 'G')
        throw IoError("png: not a png file: " + path);
    auto be32 = [&](std::size_t o) {
        return (std::uint32_t(head[o]) << 24) | (std::uint32_t(head[o + 1]) << 16) | (std::uint32_t(head[o + 2]) << 8) |
               std::uint32_t(head[o + 3]);
    };
    PngInfo info;
    info.width = be32(16);
    info.height = be32(20);
    info.bit_depth = head[24];
    info.color_type = head[25];
    return info;
}

/// Tiles [n,C,H,W] images into a rows x cols grid (row-major, no gutters) of
/// exactly cols*W x rows*H pixels; missing cells are black.
struct ImageGrid {
    std::size_t width = 0, height = 0, channels = 0;
    std::vector<unsigned char> pixels;
};

inline ImageGrid tile_grid(const Tensor& images, std::size_t rows, std::size_t cols) {
    if (images.rank() != 4) throw std::invalid_argument("tile_grid: expected [n,C,H,W]");
    std::size_t n = images.dim(0), c = images.dim(1), h = images.dim(2), w = images.dim(3);
    if (c != 1 && c != 3) throw std::invalid_argument("tile_grid: 1 or 3 channels");
    ImageGrid grid;
    grid.channels = c;
    grid.width = cols * w;
    grid.height = rows * h;
    grid.pixels.assign(grid.width * grid.height * c, 0);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t q = 0; q < cols; ++q) {
            std::size_t i = r * cols + q;
            if (i >= n) continue;
            for (std::size_t y = 0; y < h; ++y)
                for (std::size_t x = 0; x < w; ++x)
                    for (std::size_t ch = 0; ch < c; ++ch) {
                        double v = images[((i * c + ch) * h + y) * w + x];
                        v = std::min(1.0, std::max(0.0, v));
                        std::size_t gy = r * h + y, gx = q * w + x;
                        grid.pixels[(gy * grid.width + gx) * c + ch] =
                            static_cast<unsigned char>(std::lround(v * 255.0));
                    }
        }
    return grid;
}

inline void write_png_grid(const std::string& path, const Tensor& images, std::size_t rows, std::size_t cols) {
    ImageGrid grid = tile_grid(images, rows, cols);
    write_png(path, grid.width, grid.height, grid.channels, grid.pixels);
}

}  // namespace vgf

#endif  // VGF_IMAGE_HPP
