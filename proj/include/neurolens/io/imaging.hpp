#pragma once

#include <array>
#include <cstdint>
#include <filesystem>

#include "neurolens/core.hpp"

namespace neurolens::io {

/// Boundary colour used by write_overlay.
inline constexpr std::array<std::uint8_t, 3> kOverlayAccent{255, 0, 0};

/// NPY (f4/f8, singleton axes squeezed) or 8/16-bit grayscale PNG (scaled to
/// [0,1]). The result is min-max normalised if any value lies outside [0,1].
Heatmap read_heatmap(const std::filesystem::path& path);

/// 8-bit PNG: foreground iff value > 127. NPY float: > 0.5. NPY u1/b1: > 127 / true.
BinaryMask read_mask(const std::filesystem::path& path);

/// 8-bit grayscale PNG, 255 for foreground.
void write_mask_png(const std::filesystem::path& path, const BinaryMask& mask);

/// RGB PNG: the base image in gray, the mask boundary (foreground pixels with a
/// background 4-neighbour or on the grid edge) painted kOverlayAccent.
void write_overlay(const std::filesystem::path& path, const Heatmap& base, const BinaryMask& mask);

/// Foreground pixels that touch the background or the grid edge (4-adjacency).
BinaryMask mask_boundary(const BinaryMask& mask);

}  // namespace neurolens::io
