#include <catch2/catch.hpp>

#include <cstdio>
#include <fstream>

#include "vgf/config.hpp"
#include "vgf/image.hpp"
#include "vgf/rng.hpp"

using namespace vgf;

TEST_CASE("config parses key=value lines with comments", "[config]") {
    Config cfg = Config::parse("# header\ntrain.k = 3\nmodel.K=100  # inline\n\nvcd.rho = 0.01\n");
    REQUIRE(cfg.require_int("train.k") == 3);
    REQUIRE(cfg.require_int("model.K") == 100);
    REQUIRE(cfg.get_double("vcd.rho", 1.0) == Approx(0.01));

    REQUIRE_THROWS_AS(Config::parse("no equals sign"), ConfigError);
    REQUIRE_THROWS_AS(Config::parse("= value"), ConfigError);
}

TEST_CASE("unknown keys are config errors", "[config]") {
    Config cfg = Config::parse("train.k = 1\ntrain.kk = 2\n");
    cfg.get_int("train.k", 1);
    REQUIRE_THROWS_WITH(cfg.ensure_all_consumed(), Catch::Contains("train.kk"));
    cfg.get_int("train.kk", 0);
    REQUIRE_NOTHROW(cfg.ensure_all_consumed());
}

TEST_CASE("reads materialize defaults into the snapshot", "[config]") {
    Config cfg = Config::parse("a.x = 5\n");
    REQUIRE(cfg.get_int("a.x", 1) == 5);
    REQUIRE(cfg.get_int("a.y", 7) == 7);
    REQUIRE(cfg.get_bool("a.flag", true));
    cfg.write("cfg_snapshot.txt");

    Config back = Config::parse_file("cfg_snapshot.txt");
    REQUIRE(back.get_int("a.y", 0) == 7);
    REQUIRE(back.get_bool("a.flag", false));
    REQUIRE(back.get_int("a.x", 0) == 5);
    std::remove("cfg_snapshot.txt");
}

TEST_CASE("typed getters reject garbage", "[config]") {
    Config cfg = Config::parse("a = hello\nb = 1.5.2\n");
    REQUIRE_THROWS_AS(cfg.get_int("a", 0), ConfigError);
    REQUIRE_THROWS_AS(cfg.get_double("b", 0.0), ConfigError);
    REQUIRE_THROWS_AS(Config::parse_file("no-such-config"), ConfigError);
    REQUIRE_THROWS_WITH(Config().require_str("missing.key"), Catch::Contains("missing.key"));
}

namespace {

// stored-deflate decoder, enough to verify our own writer's pixels
std::vector<unsigned char> decode_png_pixels(const std::string& path, PngInfo& info) {
    info = read_png_info(path);
    std::ifstream is(path, std::ios::binary);
    std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
    std::size_t pos = 8;
    std::vector<unsigned char> idat;
    auto be32 = [&](std::size_t o) {
        return (std::uint32_t(bytes[o]) << 24) | (std::uint32_t(bytes[o + 1]) << 16) |
               (std::uint32_t(bytes[o + 2]) << 8) | std::uint32_t(bytes[o + 3]);
    };
    while (pos + 8 <= bytes.size()) {
        std::uint32_t len = be32(pos);
        std::string type(bytes.begin() + pos + 4, bytes.begin() + pos + 8);
        if (type == "IDAT") idat.insert(idat.end(), bytes.begin() + pos + 8, bytes.begin() + pos + 8 + len);
        pos += 12 + len;
    }
    // skip 2-byte zlib header, then walk stored blocks
    std::vector<unsigned char> raw;
    std::size_t p = 2;
    while (p + 5 <= idat.size()) {
        bool final = idat[p] & 1;
        std::size_t len = idat[p + 1] | (idat[p + 2] << 8);
        raw.insert(raw.end(), idat.begin() + p + 5, idat.begin() + p + 5 + len);
        p += 5 + len;
        if (final) break;
    }
    // strip filter bytes (always 0 in our writer)
    std::size_t channels = info.color_type == 2 ? 3 : 1;
    std::size_t stride = info.width * channels;
    std::vector<unsigned char> pixels;
    for (std::size_t y = 0; y < info.height; ++y) {
        REQUIRE(raw[y * (stride + 1)] == 0);
        pixels.insert(pixels.end(), raw.begin() + static_cast<std::ptrdiff_t>(y * (stride + 1) + 1),
                      raw.begin() + static_cast<std::ptrdiff_t>((y + 1) * (stride + 1)));
    }
    return pixels;
}

}  // namespace

TEST_CASE("png grayscale round-trips through our own decoder", "[image]") {
    Rng rng(3);
    std::vector<unsigned char> pixels(17 * 9);
    for (auto& p : pixels) p = static_cast<unsigned char>(rng.integer(256));
    write_png("test_gray.png", 17, 9, 1, pixels);

    PngInfo info;
    auto back = decode_png_pixels("test_gray.png", info);
    REQUIRE(info.width == 17);
    REQUIRE(info.height == 9);
    REQUIRE(info.bit_depth == 8);
    REQUIRE(info.color_type == 0);
    REQUIRE(back == pixels);
    std::remove("test_gray.png");
}

TEST_CASE("png rgb header is correct", "[image]") {
    std::vector<unsigned char> pixels(4 * 2 * 3, 128);
    write_png("test_rgb.png", 4, 2, 3, pixels);
    PngInfo info = read_png_info("test_rgb.png");
    REQUIRE(info.width == 4);
    REQUIRE(info.height == 2);
    REQUIRE(info.color_type == 2);
    std::remove("test_rgb.png");
}

TEST_CASE("tile grid has exact dimensions and row-major placement", "[image]") {
    // 5 images of 1x2x2 with constant values 0..4/10
    Tensor images({5, 1, 2, 2});
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t q = 0; q < 4; ++q) images[i * 4 + q] = static_cast<double>(i) / 10.0;

    ImageGrid grid = tile_grid(images, 2, 3);
    REQUIRE(grid.width == 6);
    REQUIRE(grid.height == 4);
    REQUIRE(grid.channels == 1);

    auto at = [&](std::size_t y, std::size_t x) { return grid.pixels[y * grid.width + x]; };
    REQUIRE(at(0, 0) == 0);                                                      // image 0
    REQUIRE(at(0, 2) == static_cast<unsigned char>(std::lround(0.1 * 255.0)));   // image 1
    REQUIRE(at(2, 0) == static_cast<unsigned char>(std::lround(0.3 * 255.0)));   // image 3, second row
    REQUIRE(at(2, 4) == 0);                                                      // missing 6th cell is black

    write_png_grid("test_grid.png", images, 2, 3);
    PngInfo info = read_png_info("test_grid.png");
    REQUIRE(info.width == 6);
    REQUIRE(info.height == 4);
    std::remove("test_grid.png");
}
