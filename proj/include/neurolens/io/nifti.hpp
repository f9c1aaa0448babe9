#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "neurolens/core.hpp"

namespace neurolens::io {

/// NIfTI-1 datatype codes this reader accepts.
enum class NiftiType : std::int16_t {
    UInt8 = 2,
    Int16 = 4,
    Int32 = 8,
    Float32 = 16,
    Float64 = 64,
    Int8 = 256,
    UInt16 = 512,
    UInt32 = 768,
};

struct NiftiHeader {
    std::array<std::int16_t, 8> dim{};
    NiftiType datatype = NiftiType::UInt8;
    std::int16_t bitpix = 0;
    float vox_offset = 0;
    float scl_slope = 0;
    float scl_inter = 0;
    VolumeGeometry geometry;
    std::string magic;       ///< "n+1" (single file) or "ni1" (header/image pair)
    bool byte_swapped = false;
};

struct NiftiVolume {
    NiftiHeader header;
    VolumeDims dims;
    std::vector<double> voxels;  ///< scaled by scl_slope/scl_inter when slope != 0
};

/// Decodes the 348-byte header. Throws FormatError on a bad size field, magic,
/// datatype code or dim[0] != 3.
NiftiHeader parse_nifti_header(std::span<const std::uint8_t> bytes);

/// Decodes a complete volume. For "n+1" files `image` is ignored and the voxels
/// start at vox_offset inside `header_bytes`; for "ni1" they come from `image`.
NiftiVolume parse_nifti(std::span<const std::uint8_t> header_bytes, std::span<const std::uint8_t> image = {});

/// Reads .nii, .nii.gz or a .hdr/.img pair (either path may be given, each part
/// optionally gzip-compressed).
NiftiVolume read_nifti(const std::filesystem::path& path);

/// Rounds voxel values to integer labels. Throws FormatError on negative or
/// non-finite values.
std::vector<std::int32_t> volume_labels(const NiftiVolume& volume);

/// Index -> name table from a two-column CSV (index,name; optional header row)
/// or an FSL-style atlas XML. FSL XML indices are 0-based while the label
/// image is 1-based, so `<atlas>` documents are shifted by +1. Throws
/// FormatError on duplicate indices.
std::map<std::int32_t, std::string> read_label_table(const std::filesystem::path& path);
std::map<std::int32_t, std::string> parse_label_csv(std::string_view text);
std::map<std::int32_t, std::string> parse_label_xml(std::string_view text);

/// Volume plus name table.
Atlas read_atlas(const std::filesystem::path& volume_path, const std::filesystem::path& labels_path);

}  // namespace neurolens::io
