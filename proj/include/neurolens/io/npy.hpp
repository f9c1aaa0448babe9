#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "neurolens/core.hpp"

namespace neurolens::io {

/// In-memory NPY array. `descr` is the numpy type string ("<f4", "|u1", ...),
/// `data` the raw little-endian C-order payload.
struct NpyArray {
    std::string descr;
    std::vector<std::size_t> shape;
    std::vector<std::uint8_t> data;

    [[nodiscard]] std::size_t element_size() const;
    [[nodiscard]] std::size_t element_count() const noexcept;
    /// The type letter without byte order or size, e.g. 'f' for "<f4".
    [[nodiscard]] char kind() const;

    friend bool operator==(const NpyArray&, const NpyArray&) = default;
};

/// Parses a version 1.x/2.x/3.x NPY buffer. Throws FormatError on a bad magic,
/// malformed header, big-endian or Fortran-ordered data, or a short payload.
NpyArray parse_npy(std::span<const std::uint8_t> bytes);

/// Encodes as NPY 1.0 with the exact header layout numpy itself writes.
std::vector<std::uint8_t> serialize_npy(const NpyArray& array);

NpyArray read_npy(const std::filesystem::path& path);
void write_npy(const std::filesystem::path& path, const NpyArray& array);

NpyArray make_npy_f32(std::vector<std::size_t> shape, std::span<const float> values);
NpyArray make_npy_f64(std::vector<std::size_t> shape, std::span<const double> values);
NpyArray make_npy_u8(std::vector<std::size_t> shape, std::span<const std::uint8_t> values);

/// 2D shapes pass through; otherwise axes of length 1 are dropped and exactly
/// two must remain. Throws FormatError.
Shape squeeze_to_2d(const std::vector<std::size_t>& shape);

/// Element values widened to double. Supports f4, f8, u1, b1.
std::vector<double> npy_values(const NpyArray& array);

}  // namespace neurolens::io
