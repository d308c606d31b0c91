#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "sectlab/image.hpp"
#include "sectlab/rng.hpp"

using namespace sectlab;

TEST_CASE("width schedule reproduces every size band") {
    const std::uint64_t kB = 1000;
    CHECK(width_for_size(9 * kB) == 32);
    CHECK(width_for_size(10 * kB) == 64);
    CHECK(width_for_size(29 * kB) == 64);
    CHECK(width_for_size(30 * kB) == 128);
    CHECK(width_for_size(50 * kB) == 128);
    CHECK(width_for_size(60 * kB) == 256);
    CHECK(width_for_size(99 * kB) == 256);
    CHECK(width_for_size(100 * kB) == 384);
    CHECK(width_for_size(177 * kB) == 384);  // the paper's average sample size
    CHECK(width_for_size(200 * kB) == 512);
    CHECK(width_for_size(499 * kB) == 512);
    CHECK(width_for_size(500 * kB) == 768);
    CHECK(width_for_size(999 * kB) == 768);
    CHECK(width_for_size(1000 * kB) == 1024);
    CHECK(width_for_size(1999 * kB) == 1024);
    CHECK(width_for_size(2000 * kB) == 2048);
    CHECK(width_for_size(20000 * kB) == 2048);

    SUBCASE("monotone and total") {
        Rng rng(4);
        int prev_width = width_for_size(1);
        std::uint64_t prev_size = 1;
        for (int i = 0; i < 2000; ++i) {
            const std::uint64_t size = prev_size + rng.bounded(5000);
            const int w = width_for_size(size);
            CHECK(w >= prev_width);
            prev_width = w;
            prev_size = size;
        }
    }
}

TEST_CASE("bytes_to_image fills rows and drops the incomplete tail") {
    SUBCASE("96 bytes make 32x3 with nothing dropped") {
        std::vector<std::uint8_t> bytes(96);
        for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = static_cast<std::uint8_t>(i);
        const GrayImage img = bytes_to_image(bytes);
        CHECK(img.width == 32);
        CHECK(img.height == 3);
        CHECK(img.at(0, 0) == 0);
        CHECK(img.at(1, 0) == 32);
        CHECK(img.at(2, 31) == 95);
    }
    SUBCASE("100 bytes still make 32x3, last 4 discarded") {
        std::vector<std::uint8_t> bytes(100, 9);
        const GrayImage img = bytes_to_image(bytes);
        CHECK(img.width == 32);
        CHECK(img.height == 3);
        CHECK(img.pixels.size() == 96);
    }
    SUBCASE("16 bytes cannot fill a row") {
        std::vector<std::uint8_t> bytes(16, 1);
        try {
            bytes_to_image(bytes);
            FAIL("expected ImageError");
        } catch (const ImageError& e) {
            CHECK(e.code() == ImageErrc::kInputTooSmall);
        }
    }
    SUBCASE("always drops fewer than width bytes") {
        Rng rng(12);
        for (int i = 0; i < 1000; ++i) {
            const std::size_t len = 32 + rng.bounded(300000);
            std::vector<std::uint8_t> bytes(len, 0);
            const GrayImage img = bytes_to_image(bytes);
            const std::size_t dropped = len - img.pixels.size();
            CHECK(dropped < static_cast<std::size_t>(img.width));
        }
    }
}

TEST_CASE("bilinear resize") {
    SUBCASE("constant image stays constant") {
        GrayImage img;
        img.width = 5;
        img.height = 9;
        img.pixels.assign(45, 177);
        const GrayImage out = resize_bilinear(img, 64, 64);
        for (auto p : out.pixels) CHECK(p == 177);
    }
    SUBCASE("identity resize is pixel-exact") {
        Rng rng(13);
        GrayImage img;
        img.width = 17;
        img.height = 11;
        img.pixels.resize(17 * 11);
        rng.fill(img.pixels);
        const GrayImage out = resize_bilinear(img, 17, 11);
        CHECK(out.pixels == img.pixels);
    }
    SUBCASE("2x2 ramp upsamples to the corner-aligned gradient") {
        GrayImage img;
        img.width = 2;
        img.height = 2;
        img.pixels = {0, 255, 0, 255};
        const GrayImage out = resize_bilinear(img, 4, 4);
        for (int r = 0; r < 4; ++r) {
            CHECK(out.at(r, 0) == 0);
            CHECK(out.at(r, 1) == 85);
            CHECK(out.at(r, 2) == 170);
            CHECK(out.at(r, 3) == 255);
        }
    }
    SUBCASE("intensity stays within the input range") {
        Rng rng(14);
        for (int trial = 0; trial < 50; ++trial) {
            GrayImage img;
            img.width = 1 + static_cast<int>(rng.bounded(40));
            img.height = 1 + static_cast<int>(rng.bounded(40));
            img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
            rng.fill(img.pixels);
            std::uint8_t lo = 255, hi = 0;
            for (auto p : img.pixels) {
                lo = std::min(lo, p);
                hi = std::max(hi, p);
            }
            const GrayImage out = resize_bilinear(img, 64, 64);
            for (auto p : out.pixels) {
                CHECK(p >= lo);
                CHECK(p <= hi);
            }
        }
    }
}

TEST_CASE("PGM round-trip") {
    Rng rng(15);
    GrayImage img;
    img.width = 32;
    img.height = 7;
    img.pixels.resize(32 * 7);
    rng.fill(img.pixels);

    const auto path = std::filesystem::temp_directory_path() / "sectlab_test_img.pgm";
    write_pgm(path.string(), img);
    const GrayImage back = read_pgm(path.string());
    CHECK(back.width == img.width);
    CHECK(back.height == img.height);
    CHECK(back.pixels == img.pixels);
    std::filesystem::remove(path);
}
