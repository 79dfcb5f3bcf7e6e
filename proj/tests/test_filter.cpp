#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "protoscribe/filter.hpp"
#include "protoscribe/rng.hpp"

using namespace protoscribe;

TEST_CASE("binarize uses a strict inequality") {
    GrayImage img(4, 4, 0.8);
    GrayImage out = binarize(img, 0.8);
    for (double v : out.data()) CHECK(v == 0.0); // 0.8 > 0.8 is false
}

TEST_CASE("binarize keeps an all-ones image") {
    GrayImage img(3, 3, 1.0);
    for (double v : binarize(img, 0.97).data()) CHECK(v == 1.0);
}

TEST_CASE("binarize isolates the single supra-threshold pixel") {
    GrayImage img(3, 3, 0.1);
    img.set(1, 1, 0.9);
    GrayImage out = binarize(img, 0.8);
    CHECK(out.at(1, 1) == 1.0);
    CHECK(out.at(0, 0) == 0.0);
    double sum = 0;
    for (double v : out.data()) sum += v;
    CHECK(sum == 1.0);
}

TEST_CASE("dilate grows a center pixel into the structuring square") {
    GrayImage img(7, 7, 0.0);
    img.set(3, 3, 1.0);
    GrayImage out = dilate(img, 2);
    for (int y = 0; y < 7; ++y)
        for (int x = 0; x < 7; ++x) {
            bool inside = std::abs(x - 3) <= 2 && std::abs(y - 3) <= 2;
            CHECK(out.at(x, y) == (inside ? 1.0 : 0.0));
        }
}

TEST_CASE("dilate of all-zeros is all-zeros, radius 0 is identity") {
    GrayImage zeros(5, 5, 0.0);
    CHECK(dilate(zeros, 2) == zeros);
    GrayImage img(5, 5, 0.0);
    img.set(0, 4, 1.0);
    CHECK(dilate(img, 0) == img);
}

TEST_CASE("dilate rejects non-binary input") {
    GrayImage img(2, 2, 0.5);
    CHECK_THROWS_AS(dilate(img, 1), DataError);
}

TEST_CASE("gaussian_blur keeps constants constant") {
    GrayImage img(9, 9, 0.37);
    GrayImage out = gaussian_blur(img, 2.0);
    for (double v : out.data()) CHECK(v == Catch::Approx(0.37).margin(1e-12));
}

TEST_CASE("gaussian_blur of an impulse is the kernel outer product") {
    GrayImage img(15, 15, 0.0);
    img.set(7, 7, 1.0);
    GrayImage out = gaussian_blur(img, 1.0);
    std::vector<double> k = gaussian_kernel(1.0);
    int radius = int(k.size() / 2);
    double peak = k[std::size_t(radius)] * k[std::size_t(radius)];
    CHECK(out.at(7, 7) == Catch::Approx(peak).margin(1e-12));
    CHECK(out.at(7 + 1, 7) ==
          Catch::Approx(k[std::size_t(radius)] * k[std::size_t(radius + 1)]).margin(1e-12));
    CHECK(oracle::max_abs_diff(out, oracle::blur_direct(img, 1.0)) < 1e-12);
}

TEST_CASE("gaussian_blur preserves mass of interior-supported inputs") {
    GrayImage img(32, 32, 0.0);
    SplitMix64 rng(3);
    for (int y = 12; y < 20; ++y)
        for (int x = 12; x < 20; ++x) img.set(x, y, rng.uniform01());
    double before = 0, after = 0;
    GrayImage out = gaussian_blur(img, 2.0);
    for (double v : img.data()) before += v;
    for (double v : out.data()) after += v;
    CHECK(after == Catch::Approx(before).margin(1e-9));
}

TEST_CASE("reference_mask handles empty and full support") {
    FilterParams params;
    Prototype zeros{"z", GrayImage(12, 12, 0.0)};
    for (double v : reference_mask(zeros, params).data()) CHECK(v == 0.0);
    Prototype ones{"o", GrayImage(12, 12, 1.0)};
    for (double v : reference_mask(ones, params).data())
        CHECK(v == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("reference_mask of a lone bright pixel matches the composed oracle") {
    GrayImage img(9, 9, 0.0);
    img.set(4, 4, 0.9);
    Prototype proto{"p", img};
    FilterParams params; // defaults: t=0.8, dilate 2, sigma 2
    GrayImage mask = reference_mask(proto, params);
    GrayImage expected = oracle::reference_mask_direct(img, params);
    CHECK(oracle::max_abs_diff(mask, expected) < 1e-12);
}

TEST_CASE("filter_prototype is the pixel-wise product") {
    Prototype p{"p", GrayImage(4, 4, 0.8)};
    CHECK(filter_prototype(GrayImage(4, 4, 1.0), p) == p.image);
    for (double v : filter_prototype(GrayImage(4, 4, 0.0), p).data()) CHECK(v == 0.0);
    for (double v : filter_prototype(GrayImage(4, 4, 0.5), p).data())
        CHECK(v == Catch::Approx(0.4).margin(1e-12));
    CHECK_THROWS_AS(filter_prototype(GrayImage(3, 3, 1.0), p), DataError);
}

TEST_CASE("filtering_error counts supra-threshold pixels outside the mask") {
    FilterParams params;
    Prototype dim{"d", GrayImage(6, 6, 0.5)}; // everything below t'
    CHECK(filtering_error(GrayImage(6, 6, 0.0), dim, params) == 0.0);

    Prototype bright{"b", GrayImage(6, 6, 0.9)};
    CHECK(filtering_error(GrayImage(6, 6, 1.0), bright, params) == 0.0);

    GrayImage p(6, 6, 0.0);
    int placed = 0;
    for (int i = 0; i < 7; ++i) p.set(i % 6, i / 6, 0.7), ++placed;
    REQUIRE(placed == 7);
    CHECK(filtering_error(GrayImage(6, 6, 0.0), Prototype{"s", p}, params) == 7.0);
}

TEST_CASE("flag thresholds are strict per the 15/30 rule") {
    FilterParams params;
    CHECK(flag(10.0, params) == FilterFlag::Ok);
    CHECK(flag(15.0, params) == FilterFlag::Ok);
    CHECK(flag(20.0, params) == FilterFlag::Warn);
    CHECK(flag(30.0, params) == FilterFlag::Warn);
    CHECK(flag(35.0, params) == FilterFlag::Fail);
}

TEST_CASE("reference_mask and filtering_error match brute force on random images") {
    SplitMix64 rng(11);
    for (int trial = 0; trial < 60; ++trial) {
        int w = 4 + int(rng.below(13));
        int h = 4 + int(rng.below(13));
        GrayImage r = oracle::random_image(rng, w, h);
        GrayImage p = oracle::random_image(rng, w, h);
        FilterParams params;
        params.t = 0.2 + 0.6 * rng.uniform01();
        params.t_prime = 0.2 + 0.6 * rng.uniform01();
        params.dilate_radius = int(rng.below(4));
        params.sigma = 0.5 + 2.5 * rng.uniform01();
        if (rng.below(2)) params.element = StructuringElement::Disk;

        GrayImage mask = reference_mask(Prototype{"r", r}, params);
        CHECK(oracle::max_abs_diff(mask, oracle::reference_mask_direct(r, params)) < 1e-9);
        CHECK(filtering_error(mask, Prototype{"p", p}, params) ==
              Catch::Approx(oracle::filtering_error_direct(mask, p, params.t_prime)).margin(1e-9));
    }
}

TEST_CASE("mask shrinks as t rises; error shrinks as dilation grows") {
    SplitMix64 rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        GrayImage r = oracle::random_image(rng, 12, 12);
        GrayImage p = oracle::random_image(rng, 12, 12);
        FilterParams lo, hi;
        lo.t = 0.3;
        hi.t = 0.7;
        GrayImage mask_lo = reference_mask(Prototype{"r", r}, lo);
        GrayImage mask_hi = reference_mask(Prototype{"r", r}, hi);
        for (std::size_t i = 0; i < mask_lo.data().size(); ++i)
            CHECK(mask_hi.data()[i] <= mask_lo.data()[i] + 1e-12);

        FilterParams small_d, big_d;
        small_d.dilate_radius = 1;
        big_d.dilate_radius = 3;
        double e_small =
            filtering_error(reference_mask(Prototype{"r", r}, small_d), Prototype{"p", p}, small_d);
        double e_big =
            filtering_error(reference_mask(Prototype{"r", r}, big_d), Prototype{"p", p}, big_d);
        CHECK(e_big <= e_small + 1e-12);
    }
}

TEST_CASE("F stays below both M and P everywhere") {
    SplitMix64 rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        GrayImage r = oracle::random_image(rng, 10, 10);
        GrayImage p = oracle::random_image(rng, 10, 10);
        GrayImage mask = reference_mask(Prototype{"r", r}, FilterParams{});
        GrayImage f = filter_prototype(mask, Prototype{"p", p});
        for (std::size_t i = 0; i < f.data().size(); ++i) {
            CHECK(f.data()[i] <= mask.data()[i] + 1e-12);
            CHECK(f.data()[i] <= p.data()[i] + 1e-12);
        }
    }
}

TEST_CASE("self-filtering error vanishes on interior-supported prototypes when t' >= t") {
    // radial profile with a slow falloff: the t'-contour sits deep inside the
    // t-contour, so the mask is exactly 1 on every supra-t' pixel
    const int side = 64;
    GrayImage r(side, side, 0.0);
    const double c = (side - 1) / 2.0;
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
            double d = std::sqrt((x - c) * (x - c) + (y - c) * (y - c));
            r.set(x, y, clamp01((28.0 - d) / 27.0));
        }
    FilterParams params;
    params.t = 0.8;
    params.t_prime = 0.95;
    Prototype proto{"blob", r};
    GrayImage mask = reference_mask(proto, params);
    CHECK(filtering_error(mask, proto, params) <= 1e-9);
}

TEST_CASE("filter params validate their ranges") {
    FilterParams params;
    params.t = 1.5;
    CHECK_THROWS_AS(params.validate(), DataError);
    params = {};
    params.warn_at = 40.0; // above fail_at
    CHECK_THROWS_AS(params.validate(), DataError);
}
