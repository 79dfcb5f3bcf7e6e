#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "protoscribe/errors.hpp"

namespace protoscribe {

inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

struct Rgb {
    double r = 0.0, g = 0.0, b = 0.0;

    Rgb clamped() const { return {clamp01(r), clamp01(g), clamp01(b)}; }
    double operator[](int c) const { return c == 0 ? r : (c == 1 ? g : b); }

    friend bool operator==(const Rgb& a, const Rgb& b) {
        return a.r == b.r && a.g == b.g && a.b == b.b;
    }
};

/// Rectangular grid of intensities in [0,1], row-major. Mutating accessors
/// clamp, so a constructed image never holds an out-of-range value.
class GrayImage {
public:
    GrayImage() = default;

    GrayImage(int width, int height, double fill = 0.0)
        : width_(checked_dim(width)), height_(checked_dim(height)),
          data_(std::size_t(width_) * std::size_t(height_), clamp01(fill)) {}

    static GrayImage from_data(int width, int height, std::vector<double> data) {
        checked_dim(width);
        checked_dim(height);
        if (data.size() != std::size_t(width) * std::size_t(height))
            throw DataError("GrayImage: data length does not match width*height");
        GrayImage img;
        img.width_ = width;
        img.height_ = height;
        img.data_ = std::move(data);
        for (double& v : img.data_) v = clamp01(v);
        return img;
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double at(int x, int y) const { return data_[idx(x, y)]; }
    void set(int x, int y, double v) { data_[idx(x, y)] = clamp01(v); }

    const std::vector<double>& data() const { return data_; }
    const double* row(int y) const { return data_.data() + std::size_t(y) * width_; }

    bool same_size(const GrayImage& o) const {
        return width_ == o.width_ && height_ == o.height_;
    }

    friend bool operator==(const GrayImage& a, const GrayImage& b) {
        return a.width_ == b.width_ && a.height_ == b.height_ && a.data_ == b.data_;
    }

private:
    static int checked_dim(int v) {
        if (v < 0) throw DataError("GrayImage: negative dimensions");
        return v;
    }
    std::size_t idx(int x, int y) const { return std::size_t(y) * width_ + x; }

    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

/// RGB raster with all channels in [0,1], row-major, 3 doubles per pixel.
class ColorImage {
public:
    ColorImage() = default;

    ColorImage(int width, int height, Rgb fill = {0, 0, 0})
        : width_(checked_dim(width)), height_(checked_dim(height)),
          data_(std::size_t(width_) * height_ * 3) {
        Rgb f = fill.clamped();
        for (std::size_t i = 0; i < data_.size(); i += 3) {
            data_[i] = f.r;
            data_[i + 1] = f.g;
            data_[i + 2] = f.b;
        }
    }

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return data_.empty(); }

    Rgb at(int x, int y) const {
        std::size_t i = idx(x, y);
        return {data_[i], data_[i + 1], data_[i + 2]};
    }
    void set(int x, int y, Rgb c) {
        std::size_t i = idx(x, y);
        data_[i] = clamp01(c.r);
        data_[i + 1] = clamp01(c.g);
        data_[i + 2] = clamp01(c.b);
    }

    const std::vector<double>& data() const { return data_; }

    bool same_size(const ColorImage& o) const {
        return width_ == o.width_ && height_ == o.height_;
    }

    friend bool operator==(const ColorImage& a, const ColorImage& b) {
        return a.width_ == b.width_ && a.height_ == b.height_ && a.data_ == b.data_;
    }

private:
    static int checked_dim(int v) {
        if (v < 0) throw DataError("ColorImage: negative dimensions");
        return v;
    }
    std::size_t idx(int x, int y) const { return (std::size_t(y) * width_ + x) * 3; }

    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

/// Bilinear sample with edge clamping; coordinates are pixel centers.
inline double sample_clamped(const GrayImage& img, double x, double y) {
    if (img.empty()) return 0.0;
    double fx = std::clamp(x, 0.0, double(img.width() - 1));
    double fy = std::clamp(y, 0.0, double(img.height() - 1));
    int x0 = int(fx), y0 = int(fy);
    int x1 = std::min(x0 + 1, img.width() - 1);
    int y1 = std::min(y0 + 1, img.height() - 1);
    double tx = fx - x0, ty = fy - y0;
    double a = img.at(x0, y0) * (1 - tx) + img.at(x1, y0) * tx;
    double b = img.at(x0, y1) * (1 - tx) + img.at(x1, y1) * tx;
    return a * (1 - ty) + b * ty;
}

/// Bilinear sample that fades to zero outside the pixel grid. Used when a
/// prototype is placed on a canvas: there is no ink beyond its support.
inline double sample_zero_outside(const GrayImage& img, double x, double y) {
    if (x <= -1.0 || y <= -1.0 || x >= double(img.width()) || y >= double(img.height()))
        return 0.0;
    int x0 = int(std::floor(x)), y0 = int(std::floor(y));
    double tx = x - x0, ty = y - y0;
    auto tap = [&](int px, int py) -> double {
        if (px < 0 || py < 0 || px >= img.width() || py >= img.height()) return 0.0;
        return img.at(px, py);
    };
    double a = tap(x0, y0) * (1 - tx) + tap(x0 + 1, y0) * tx;
    double b = tap(x0, y0 + 1) * (1 - tx) + tap(x0 + 1, y0 + 1) * tx;
    return a * (1 - ty) + b * ty;
}

inline Rgb sample_clamped(const ColorImage& img, double x, double y) {
    if (img.empty()) return {};
    double fx = std::clamp(x, 0.0, double(img.width() - 1));
    double fy = std::clamp(y, 0.0, double(img.height() - 1));
    int x0 = int(fx), y0 = int(fy);
    int x1 = std::min(x0 + 1, img.width() - 1);
    int y1 = std::min(y0 + 1, img.height() - 1);
    double tx = fx - x0, ty = fy - y0;
    auto lerp = [&](double a, double b, double t) { return a * (1 - t) + b * t; };
    Rgb c00 = img.at(x0, y0), c10 = img.at(x1, y0), c01 = img.at(x0, y1), c11 = img.at(x1, y1);
    return {lerp(lerp(c00.r, c10.r, tx), lerp(c01.r, c11.r, tx), ty),
            lerp(lerp(c00.g, c10.g, tx), lerp(c01.g, c11.g, tx), ty),
            lerp(lerp(c00.b, c10.b, tx), lerp(c01.b, c11.b, tx), ty)};
}

/// Integer horizontal shift that would center the ink bounding box (pixels
/// above rel_threshold * peak), clamped so no ink falls off the canvas.
/// Zero for empty images.
inline int ink_centering_shift(const GrayImage& img, double rel_threshold = 0.5) {
    double peak = 0.0;
    for (double v : img.data()) peak = std::max(peak, v);
    if (peak <= 0.0) return 0;
    double thr = rel_threshold * peak;
    int x_min = img.width(), x_max = -1;
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            if (img.at(x, y) > thr) {
                x_min = std::min(x_min, x);
                x_max = std::max(x_max, x);
            }
    if (x_max < 0) return 0;
    double center = (x_min + x_max) / 2.0;
    int shift = int(std::lround((img.width() - 1) / 2.0 - center));
    shift = std::max(shift, -x_min);
    shift = std::min(shift, img.width() - 1 - x_max);
    return shift;
}

/// Shifts an image horizontally by whole pixels, filling vacated columns
/// with zero. Lossless for shifts within the ink margins.
inline GrayImage shift_horizontal(const GrayImage& img, int shift) {
    if (shift == 0) return img;
    GrayImage out(img.width(), img.height(), 0.0);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            int src = x - shift;
            if (src >= 0 && src < img.width()) out.set(x, y, img.at(src, y));
        }
    return out;
}

/// Resizes a line image to target_height, preserving aspect ratio via
/// bilinear resampling. Idempotent: a line already at target height is
/// returned unchanged, so applying twice equals applying once.
inline ColorImage normalize_line(const ColorImage& raw, int target_height) {
    if (raw.width() < 1 || raw.height() < 1)
        throw DataError("normalize_line: zero-area input image");
    if (target_height < 1) throw DataError("normalize_line: target height must be >= 1");
    if (raw.height() == target_height) return raw;

    double ratio = double(target_height) / double(raw.height());
    int target_width = std::max(1, int(std::lround(raw.width() * ratio)));
    ColorImage out(target_width, target_height);
    double sx = double(raw.width()) / target_width;
    double sy = double(raw.height()) / target_height;
    for (int y = 0; y < target_height; ++y) {
        double src_y = (y + 0.5) * sy - 0.5;
        for (int x = 0; x < target_width; ++x) {
            double src_x = (x + 0.5) * sx - 0.5;
            out.set(x, y, sample_clamped(raw, src_x, src_y));
        }
    }
    return out;
}

} // namespace protoscribe
