#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "protoscribe/errors.hpp"
#include "protoscribe/image.hpp"
#include "protoscribe/model.hpp"

namespace protoscribe {

enum class StructuringElement { Square, Disk };

/// Parameters of the mask/filter/failure-score pipeline. Defaults match the
/// published operating point: threshold 0.8, 2 px dilation, Gaussian sigma 2,
/// secondary threshold 0.65, flags at scores 15 and 30.
struct FilterParams {
    double t = 0.8;
    int dilate_radius = 2;
    double sigma = 2.0;
    double t_prime = 0.65;
    double warn_at = 15.0;
    double fail_at = 30.0;
    StructuringElement element = StructuringElement::Square;

    void validate() const {
        if (!(t > 0.0 && t < 1.0)) throw DataError("FilterParams: t must be in (0,1)");
        if (!(t_prime > 0.0 && t_prime < 1.0)) throw DataError("FilterParams: t_prime must be in (0,1)");
        if (!(sigma > 0.0)) throw DataError("FilterParams: sigma must be > 0");
        if (dilate_radius < 0) throw DataError("FilterParams: dilate_radius must be >= 0");
        if (!(warn_at >= 0.0 && warn_at <= fail_at))
            throw DataError("FilterParams: need 0 <= warn_at <= fail_at");
    }
};

enum class FilterFlag { Ok, Warn, Fail };

inline const char* to_string(FilterFlag f) {
    switch (f) {
        case FilterFlag::Warn: return "warn";
        case FilterFlag::Fail: return "fail";
        default: return "ok";
    }
}

/// Mask, filtered prototype and failure score for one character.
struct FilterReport {
    std::string char_id;
    GrayImage mask;     // M
    GrayImage filtered; // F = M * P
    double error = 0.0; // e
    FilterFlag flag = FilterFlag::Ok;
};

/// Binary mask of pixels strictly above t.
inline GrayImage binarize(const GrayImage& image, double t) {
    GrayImage out(image.width(), image.height());
    for (int y = 0; y < image.height(); ++y)
        for (int x = 0; x < image.width(); ++x)
            out.set(x, y, image.at(x, y) > t ? 1.0 : 0.0);
    return out;
}

/// Morphological dilation of a binary mask. The structuring element is a
/// (2r+1)^2 square by default; Disk keeps only offsets with dx^2+dy^2 <= r^2.
/// Radius 0 is the identity. Throws on non-binary input.
inline GrayImage dilate(const GrayImage& mask, int radius,
                        StructuringElement element = StructuringElement::Square) {
    for (double v : mask.data())
        if (v != 0.0 && v != 1.0) throw DataError("dilate: input mask is not binary");
    if (radius < 0) throw DataError("dilate: negative radius");
    if (radius == 0) return mask;

    GrayImage out(mask.width(), mask.height());
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (mask.at(x, y) != 1.0) continue;
            for (int dy = -radius; dy <= radius; ++dy) {
                int py = y + dy;
                if (py < 0 || py >= mask.height()) continue;
                for (int dx = -radius; dx <= radius; ++dx) {
                    int px = x + dx;
                    if (px < 0 || px >= mask.width()) continue;
                    if (element == StructuringElement::Disk && dx * dx + dy * dy > radius * radius)
                        continue;
                    out.set(px, py, 1.0);
                }
            }
        }
    }
    return out;
}

/// Discrete Gaussian kernel of radius ceil(3*sigma), normalized to sum 1.
inline std::vector<double> gaussian_kernel(double sigma) {
    if (!(sigma > 0.0)) throw DataError("gaussian_kernel: sigma must be > 0");
    int radius = int(std::ceil(3.0 * sigma));
    std::vector<double> k(std::size_t(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        double v = std::exp(-(double(i) * i) / (2.0 * sigma * sigma));
        k[std::size_t(i + radius)] = v;
        sum += v;
    }
    for (double& v : k) v /= sum;
    return k;
}

/// Separable Gaussian convolution with border replication. The normalized
/// kernel keeps constants constant and interior mass preserved.
inline GrayImage gaussian_blur(const GrayImage& image, double sigma) {
    std::vector<double> k = gaussian_kernel(sigma);
    int radius = int(k.size() / 2);
    int w = image.width(), h = image.height();
    if (w == 0 || h == 0) return image;

    // horizontal pass
    std::vector<double> tmp(std::size_t(w) * h);
    for (int y = 0; y < h; ++y) {
        const double* src = image.row(y);
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                int px = std::clamp(x + i, 0, w - 1);
                acc += k[std::size_t(i + radius)] * src[px];
            }
            tmp[std::size_t(y) * w + x] = acc;
        }
    }
    // vertical pass
    GrayImage out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                int py = std::clamp(y + i, 0, h - 1);
                acc += k[std::size_t(i + radius)] * tmp[std::size_t(py) * w + x];
            }
            out.set(x, y, acc);
        }
    }
    return out;
}

/// Soft spatial support of a reference prototype:
/// blur(dilate(binarize(R, t), dilate_radius), sigma).
inline GrayImage reference_mask(const Prototype& reference, const FilterParams& params = {}) {
    params.validate();
    return gaussian_blur(dilate(binarize(reference.image, params.t), params.dilate_radius, params.element),
                         params.sigma);
}

/// Pixel-wise product of mask and prototype, so F <= min(M, P) everywhere.
inline GrayImage filter_prototype(const GrayImage& mask, const Prototype& finetuned) {
    if (!mask.same_size(finetuned.image))
        throw DataError("filter_prototype: mask/prototype dimensions differ");
    GrayImage out(mask.width(), mask.height());
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            out.set(x, y, mask.at(x, y) * finetuned.image.at(x, y));
    return out;
}

/// Ink of the finetuned prototype that the mask removes, in pixel units:
/// the sum over pixels of (1 - M) where P is strictly above t_prime.
inline double filtering_error(const GrayImage& mask, const Prototype& finetuned,
                              const FilterParams& params = {}) {
    params.validate();
    if (!mask.same_size(finetuned.image))
        throw DataError("filtering_error: mask/prototype dimensions differ");
    double e = 0.0;
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            if (finetuned.image.at(x, y) > params.t_prime) e += 1.0 - mask.at(x, y);
    return e;
}

/// ok / warn / fail at strictly-greater thresholds.
inline FilterFlag flag(double e, const FilterParams& params = {}) {
    params.validate();
    if (e < 0.0) throw DataError("flag: negative error");
    if (e > params.fail_at) return FilterFlag::Fail;
    if (e > params.warn_at) return FilterFlag::Warn;
    return FilterFlag::Ok;
}

/// Runs the whole pipeline for one character.
inline FilterReport make_filter_report(const Prototype& reference, const Prototype& finetuned,
                                       const FilterParams& params = {}) {
    if (!reference.image.same_size(finetuned.image))
        throw DataError("make_filter_report: reference/finetuned dimensions differ");
    FilterReport report;
    report.char_id = finetuned.char_id;
    report.mask = reference_mask(reference, params);
    report.filtered = filter_prototype(report.mask, finetuned);
    report.error = filtering_error(report.mask, finetuned, params);
    report.flag = flag(report.error, params);
    return report;
}

} // namespace protoscribe
