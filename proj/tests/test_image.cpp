#include <catch2/catch_amalgamated.hpp>

#include "protoscribe/image.hpp"
#include "protoscribe/rng.hpp"

using namespace protoscribe;

TEST_CASE("images clamp intensities on construction and mutation") {
    GrayImage g = GrayImage::from_data(2, 1, {1.5, -0.25});
    CHECK(g.at(0, 0) == 1.0);
    CHECK(g.at(1, 0) == 0.0);
    g.set(0, 0, 2.0);
    CHECK(g.at(0, 0) == 1.0);

    ColorImage c(1, 1);
    c.set(0, 0, {2.0, -1.0, 0.5});
    CHECK(c.at(0, 0).r == 1.0);
    CHECK(c.at(0, 0).g == 0.0);
    CHECK(c.at(0, 0).b == 0.5);
}

TEST_CASE("GrayImage::from_data rejects mismatched length") {
    CHECK_THROWS_AS(GrayImage::from_data(3, 2, {0.0, 0.0}), DataError);
}

TEST_CASE("normalize_line keeps an already-normalized image unchanged") {
    ColorImage img(200, 64, {0.3, 0.5, 0.7});
    ColorImage out = normalize_line(img, 64);
    CHECK(out == img);
}

TEST_CASE("normalize_line halves both dimensions uniformly") {
    ColorImage img(400, 128, {0.2, 0.2, 0.2});
    ColorImage out = normalize_line(img, 64);
    CHECK(out.width() == 200);
    CHECK(out.height() == 64);
}

TEST_CASE("normalize_line maps a constant image to the same constant") {
    ColorImage img(300, 100, {0.5, 0.5, 0.5});
    ColorImage out = normalize_line(img, 64);
    REQUIRE(out.width() == 192);
    REQUIRE(out.height() == 64);
    for (int y = 0; y < out.height(); ++y)
        for (int x = 0; x < out.width(); ++x) {
            CHECK(out.at(x, y).r == Catch::Approx(0.5).margin(1e-12));
            CHECK(out.at(x, y).g == Catch::Approx(0.5).margin(1e-12));
        }
}

TEST_CASE("normalize_line rejects zero-area input") {
    CHECK_THROWS_AS(normalize_line(ColorImage(), 64), DataError);
}

TEST_CASE("normalize_line is idempotent") {
    SplitMix64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        int w = 20 + int(rng.below(200));
        int h = 10 + int(rng.below(150));
        ColorImage img(w, h);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                img.set(x, y, {rng.uniform01(), rng.uniform01(), rng.uniform01()});
        ColorImage once = normalize_line(img, 48);
        ColorImage twice = normalize_line(once, 48);
        CHECK(once == twice);
    }
}

TEST_CASE("bilinear samplers agree with pixel values on the grid") {
    GrayImage g(3, 3);
    g.set(1, 1, 0.8);
    CHECK(sample_clamped(g, 1.0, 1.0) == 0.8);
    CHECK(sample_zero_outside(g, 1.0, 1.0) == 0.8);
    CHECK(sample_zero_outside(g, -5.0, 1.0) == 0.0);
}
