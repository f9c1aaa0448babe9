#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "neurolens/core.hpp"

namespace neurolens::io {

/// Decoded grayscale PNG. Samples are 8- or 16-bit, stored widened.
struct GrayImage {
    Shape shape;
    int bit_depth = 8;
    std::vector<std::uint16_t> samples;
};

/// Reads an 8- or 16-bit grayscale PNG (an alpha channel is ignored; sub-byte
/// depths are expanded to 8 bits). Colour images raise FormatError.
GrayImage read_png_gray(const std::filesystem::path& path);

/// Deterministic encoders: fixed compression settings, no timestamp chunk.
void write_png_gray8(const std::filesystem::path& path, Shape shape, std::span<const std::uint8_t> pixels);
void write_png_rgb8(const std::filesystem::path& path, Shape shape, std::span<const std::uint8_t> rgb);

}  // namespace neurolens::io
