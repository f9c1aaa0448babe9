#include "neurolens/io/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "neurolens/io/npy.hpp"
#include "neurolens/io/png.hpp"

namespace neurolens::io {

namespace {

bool has_png_signature(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    char sig[8] = {};
    in.read(sig, sizeof(sig));
    return in.gcount() == 8 && static_cast<unsigned char>(sig[0]) == 0x89 && sig[1] == 'P' && sig[2] == 'N' &&
           sig[3] == 'G';
}

}  // namespace

Heatmap read_heatmap(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw InputError(fmt::format("cannot open '{}'", path.string()));
    }
    if (has_png_signature(path)) {
        const GrayImage image = read_png_gray(path);
        const double scale = image.bit_depth == 16 ? 65535.0 : 255.0;
        std::vector<double> values(image.samples.size());
        std::transform(image.samples.begin(), image.samples.end(), values.begin(),
                       [scale](std::uint16_t v) { return static_cast<double>(v) / scale; });
        return Heatmap::from_values(image.shape, std::move(values));
    }
    const NpyArray array = read_npy(path);
    if (array.kind() != 'f') {
        throw FormatError(fmt::format("'{}': unsupported heatmap dtype '{}' (expected float32 or float64)",
                                      path.string(), array.descr));
    }
    const Shape shape = squeeze_to_2d(array.shape);
    return Heatmap::from_values(shape, npy_values(array));
}

BinaryMask read_mask(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw InputError(fmt::format("cannot open '{}'", path.string()));
    }
    std::vector<std::uint8_t> bits;
    Shape shape;
    if (has_png_signature(path)) {
        const GrayImage image = read_png_gray(path);
        if (image.bit_depth != 8) {
            throw FormatError(fmt::format("'{}': masks must be 8-bit PNG", path.string()));
        }
        shape = image.shape;
        bits.resize(image.samples.size());
        std::transform(image.samples.begin(), image.samples.end(), bits.begin(),
                       [](std::uint16_t v) { return v > 127 ? 1 : 0; });
    } else {
        const NpyArray array = read_npy(path);
        shape = squeeze_to_2d(array.shape);
        const auto values = npy_values(array);
        const char kind = array.kind();
        const double cut = kind == 'f' ? 0.5 : (kind == 'b' ? 0.0 : 127.0);
        bits.resize(values.size());
        std::transform(values.begin(), values.end(), bits.begin(), [cut](double v) { return v > cut ? 1 : 0; });
    }
    return BinaryMask(shape, std::move(bits));
}

void write_mask_png(const std::filesystem::path& path, const BinaryMask& mask) {
    std::vector<std::uint8_t> pixels(mask.size());
    const auto bits = mask.bits();
    std::transform(bits.begin(), bits.end(), pixels.begin(), [](std::uint8_t b) { return b ? 255 : 0; });
    write_png_gray8(path, mask.shape(), pixels);
}

BinaryMask mask_boundary(const BinaryMask& mask) {
    const std::size_t h = mask.height();
    const std::size_t w = mask.width();
    BinaryMask out(mask.shape());
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            if (!mask.at(r, c)) {
                continue;
            }
            const bool edge = r == 0 || c == 0 || r + 1 == h || c + 1 == w;
            if (edge || !mask.at(r - 1, c) || !mask.at(r + 1, c) || !mask.at(r, c - 1) || !mask.at(r, c + 1)) {
                out.set(r, c);
            }
        }
    }
    return out;
}

void write_overlay(const std::filesystem::path& path, const Heatmap& base, const BinaryMask& mask) {
    if (base.shape() != mask.shape()) {
        throw ShapeMismatch(fmt::format("overlay base {} and mask {} differ in shape", to_string(base.shape()),
                                        to_string(mask.shape())));
    }
    const BinaryMask boundary = mask_boundary(mask);
    std::vector<std::uint8_t> rgb(base.size() * 3);
    const auto values = base.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (boundary.test(i)) {
            std::copy(kOverlayAccent.begin(), kOverlayAccent.end(), rgb.begin() + static_cast<std::ptrdiff_t>(3 * i));
            continue;
        }
        const auto g = static_cast<std::uint8_t>(std::lround(std::clamp(values[i], 0.0, 1.0) * 255.0));
        rgb[3 * i] = rgb[3 * i + 1] = rgb[3 * i + 2] = g;
    }
    write_png_rgb8(path, base.shape(), rgb);
}

}  // namespace neurolens::io
