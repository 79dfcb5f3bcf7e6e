// Brute-force reference implementations, independent of the library's
// separable/incremental code paths. Deliberately slow and literal.
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "protoscribe/filter.hpp"
#include "protoscribe/image.hpp"
#include "protoscribe/rng.hpp"

namespace oracle {

using protoscribe::GrayImage;

/// Dilation as a direct neighborhood max over the structuring element.
inline GrayImage dilate_direct(const GrayImage& mask, int radius,
                               protoscribe::StructuringElement element) {
    GrayImage out(mask.width(), mask.height());
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            double best = 0.0;
            for (int dy = -radius; dy <= radius; ++dy) {
                for (int dx = -radius; dx <= radius; ++dx) {
                    if (element == protoscribe::StructuringElement::Disk &&
                        dx * dx + dy * dy > radius * radius)
                        continue;
                    int px = x + dx, py = y + dy;
                    if (px < 0 || py < 0 || px >= mask.width() || py >= mask.height()) continue;
                    best = std::max(best, mask.at(px, py));
                }
            }
            out.set(x, y, best);
        }
    }
    return out;
}

/// Gaussian blur as a direct 2-D convolution with the outer-product kernel,
/// replicated borders.
inline GrayImage blur_direct(const GrayImage& img, double sigma) {
    std::vector<double> k = protoscribe::gaussian_kernel(sigma);
    int radius = int(k.size() / 2);
    GrayImage out(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            double acc = 0.0;
            for (int dy = -radius; dy <= radius; ++dy) {
                for (int dx = -radius; dx <= radius; ++dx) {
                    int px = std::clamp(x + dx, 0, img.width() - 1);
                    int py = std::clamp(y + dy, 0, img.height() - 1);
                    acc += k[std::size_t(dx + radius)] * k[std::size_t(dy + radius)] *
                           img.at(px, py);
                }
            }
            out.set(x, y, acc);
        }
    }
    return out;
}

inline GrayImage reference_mask_direct(const GrayImage& r, const protoscribe::FilterParams& p) {
    GrayImage bin(r.width(), r.height());
    for (int y = 0; y < r.height(); ++y)
        for (int x = 0; x < r.width(); ++x) bin.set(x, y, r.at(x, y) > p.t ? 1.0 : 0.0);
    return blur_direct(dilate_direct(bin, p.dilate_radius, p.element), p.sigma);
}

/// Eq.-style error as a literal pixel loop.
inline double filtering_error_direct(const GrayImage& mask, const GrayImage& proto,
                                     double t_prime) {
    double e = 0.0;
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            if (proto.at(x, y) > t_prime) e += 1.0 - mask.at(x, y);
    return e;
}

inline GrayImage random_image(protoscribe::SplitMix64& rng, int w, int h) {
    GrayImage img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) img.set(x, y, rng.uniform01());
    return img;
}

inline double max_abs_diff(const GrayImage& a, const GrayImage& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i)
        worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
    return worst;
}

} // namespace oracle
