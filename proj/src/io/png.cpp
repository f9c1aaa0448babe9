#include "neurolens/io/png.hpp"

#include <csetjmp>
#include <cstdio>
#include <memory>
#include <string>

#include <fmt/format.h>
#include <png.h>

namespace neurolens::io {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const noexcept { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void on_png_error(png_structp png, png_const_charp message) {
    auto* buffer = static_cast<std::string*>(png_get_error_ptr(png));
    *buffer = message;
    png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

void write_png(const std::filesystem::path& path, Shape shape, int color_type, int channels,
               std::span<const std::uint8_t> pixels) {
    if (shape.empty()) {
        throw InputError("cannot write an empty image");
    }
    if (pixels.size() != shape.size() * static_cast<std::size_t>(channels)) {
        throw ShapeMismatch(fmt::format("pixel buffer has {} bytes for a {} image with {} channels", pixels.size(),
                                        to_string(shape), channels));
    }
    FilePtr file(std::fopen(path.string().c_str(), "wb"));
    if (!file) {
        throw InputError(fmt::format("cannot write '{}'", path.string()));
    }
    std::string error;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error, on_png_error, on_png_warning);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (png == nullptr || info == nullptr) {
        png_destroy_write_struct(&png, &info);
        throw ProcessingError("libpng initialisation failed");
    }
    std::vector<png_bytep> rows(shape.height);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw ProcessingError(fmt::format("'{}': PNG encode failed: {}", path.string(), error));
    }
    png_init_io(png, file.get());
    png_set_compression_level(png, 9);
    png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_FILTER_NONE);
    png_set_IHDR(png, info, static_cast<png_uint_32>(shape.width), static_cast<png_uint_32>(shape.height), 8,
                 color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const std::size_t stride = shape.width * static_cast<std::size_t>(channels);
    for (std::size_t r = 0; r < shape.height; ++r) {
        rows[r] = const_cast<png_bytep>(pixels.data() + r * stride);
    }
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace

GrayImage read_png_gray(const std::filesystem::path& path) {
    FilePtr file(std::fopen(path.string().c_str(), "rb"));
    if (!file) {
        throw InputError(fmt::format("cannot open '{}'", path.string()));
    }
    png_byte signature[8] = {};
    if (std::fread(signature, 1, sizeof(signature), file.get()) != sizeof(signature) ||
        png_sig_cmp(signature, 0, sizeof(signature)) != 0) {
        throw FormatError(fmt::format("'{}' is not a PNG file", path.string()));
    }

    std::string error;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error, on_png_error, on_png_warning);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (png == nullptr || info == nullptr) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ProcessingError("libpng initialisation failed");
    }
    GrayImage image;
    std::vector<png_bytep> rows;
    std::vector<std::uint8_t> buffer;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError(fmt::format("'{}': corrupt PNG: {}", path.string(), error));
    }
    png_init_io(png, file.get());
    png_set_sig_bytes(png, sizeof(signature));
    png_read_info(png, info);

    const auto color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (color != PNG_COLOR_TYPE_GRAY && color != PNG_COLOR_TYPE_GRAY_ALPHA) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError(fmt::format("'{}': only grayscale PNG images are supported", path.string()));
    }
    if (depth < 8) {
        png_set_expand_gray_1_2_4_to_8(png);
    }
    if (color == PNG_COLOR_TYPE_GRAY_ALPHA) {
        png_set_strip_alpha(png);
    }
    if (depth == 16) {
        png_set_swap(png);  // little-endian samples in memory
    }
    png_read_update_info(png, info);

    image.shape = {png_get_image_height(png, info), png_get_image_width(png, info)};
    image.bit_depth = depth == 16 ? 16 : 8;
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    buffer.resize(rowbytes * image.shape.height);
    rows.resize(image.shape.height);
    for (std::size_t r = 0; r < image.shape.height; ++r) {
        rows[r] = buffer.data() + r * rowbytes;
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    image.samples.resize(image.shape.size());
    for (std::size_t i = 0; i < image.samples.size(); ++i) {
        if (image.bit_depth == 16) {
            image.samples[i] = static_cast<std::uint16_t>(buffer[2 * i] | (buffer[2 * i + 1] << 8));
        } else {
            image.samples[i] = buffer[i];
        }
    }
    return image;
}

void write_png_gray8(const std::filesystem::path& path, Shape shape, std::span<const std::uint8_t> pixels) {
    write_png(path, shape, PNG_COLOR_TYPE_GRAY, 1, pixels);
}

void write_png_rgb8(const std::filesystem::path& path, Shape shape, std::span<const std::uint8_t> rgb) {
    write_png(path, shape, PNG_COLOR_TYPE_RGB, 3, rgb);
}

}  // namespace neurolens::io
