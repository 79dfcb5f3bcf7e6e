#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <png.h>

#include "protoscribe/errors.hpp"
#include "protoscribe/image.hpp"

namespace protoscribe {

namespace detail {

inline std::uint8_t to_byte(double v) {
    return std::uint8_t(std::lround(clamp01(v) * 255.0));
}

} // namespace detail

/// Reads any PNG as RGB, mapping 8-bit samples to [0,1].
inline ColorImage read_png(const std::filesystem::path& path) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.string().c_str()))
        throw DataError("read_png: cannot read " + path.string() + ": " + image.message);
    image.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        std::string msg = image.message;
        png_image_free(&image);
        throw DataError("read_png: cannot decode " + path.string() + ": " + msg);
    }
    ColorImage out(int(image.width), int(image.height));
    std::size_t i = 0;
    for (int y = 0; y < out.height(); ++y)
        for (int x = 0; x < out.width(); ++x, i += 3)
            out.set(x, y,
                    {buffer[i] / 255.0, buffer[i + 1] / 255.0, buffer[i + 2] / 255.0});
    return out;
}

/// Writes an RGB PNG, quantizing each channel to 8 bits by rounding.
inline void write_png(const std::filesystem::path& path, const ColorImage& img) {
    if (img.empty()) throw DataError("write_png: empty image");
    std::vector<std::uint8_t> buffer(std::size_t(img.width()) * img.height() * 3);
    std::size_t i = 0;
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x, i += 3) {
            Rgb c = img.at(x, y);
            buffer[i] = detail::to_byte(c.r);
            buffer[i + 1] = detail::to_byte(c.g);
            buffer[i + 2] = detail::to_byte(c.b);
        }
    }
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = png_uint_32(img.width());
    image.height = png_uint_32(img.height());
    image.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&image, path.string().c_str(), 0, buffer.data(), 0, nullptr))
        throw DataError("write_png: cannot write " + path.string() + ": " + image.message);
}

/// Writes a grayscale PNG.
inline void write_png(const std::filesystem::path& path, const GrayImage& img) {
    if (img.empty()) throw DataError("write_png: empty image");
    std::vector<std::uint8_t> buffer(img.size());
    std::size_t i = 0;
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) buffer[i++] = detail::to_byte(img.at(x, y));
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = png_uint_32(img.width());
    image.height = png_uint_32(img.height());
    image.format = PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&image, path.string().c_str(), 0, buffer.data(), 0, nullptr))
        throw DataError("write_png: cannot write " + path.string() + ": " + image.message);
}

/// Reads a PNG as grayscale intensities.
inline GrayImage read_png_gray(const std::filesystem::path& path) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.string().c_str()))
        throw DataError("read_png_gray: cannot read " + path.string() + ": " + image.message);
    image.format = PNG_FORMAT_GRAY;
    std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        std::string msg = image.message;
        png_image_free(&image);
        throw DataError("read_png_gray: cannot decode " + path.string() + ": " + msg);
    }
    GrayImage out(int(image.width), int(image.height));
    std::size_t i = 0;
    for (int y = 0; y < out.height(); ++y)
        for (int x = 0; x < out.width(); ++x) out.set(x, y, buffer[i++] / 255.0);
    return out;
}

} // namespace protoscribe
