#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace neurolens {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad caller-supplied data: malformed files, invalid arguments, shape mismatches.
class InputError : public Error {
public:
    using Error::Error;
};

class ShapeMismatch : public InputError {
public:
    using InputError::InputError;
};

/// A file could not be decoded (bad magic, unsupported dtype, truncated payload).
class FormatError : public InputError {
public:
    using InputError::InputError;
};

/// Failure while processing otherwise valid input.
class ProcessingError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

/// Grid extent. Indexing is (row, col) with the origin at the top-left.
struct Shape {
    std::size_t height = 0;  ///< rows
    std::size_t width = 0;   ///< cols

    [[nodiscard]] std::size_t size() const noexcept { return height * width; }
    [[nodiscard]] bool empty() const noexcept { return height == 0 || width == 0; }
    friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& shape);

struct Pixel {
    std::size_t row = 0;
    std::size_t col = 0;
    friend auto operator<=>(const Pixel&, const Pixel&) = default;
};

/// Inclusive bounds, x = column and y = row.
struct BoundingBox {
    std::size_t x_min = 0;
    std::size_t y_min = 0;
    std::size_t x_max = 0;
    std::size_t y_max = 0;

    [[nodiscard]] bool contains(const Pixel& p) const noexcept {
        return p.col >= x_min && p.col <= x_max && p.row >= y_min && p.row <= y_max;
    }
    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

// ---------------------------------------------------------------------------
// Heatmap
// ---------------------------------------------------------------------------

/// Saliency intensities in [0,1], row-major. Immutable once constructed.
class Heatmap {
public:
    /// Validates and, when any value falls outside [0,1], min-max rescales.
    /// A constant out-of-range grid becomes all zeros.
    /// Throws InputError on an empty grid or non-finite values.
    static Heatmap from_values(Shape shape, std::vector<double> values);

    [[nodiscard]] const Shape& shape() const noexcept { return shape_; }
    [[nodiscard]] std::size_t height() const noexcept { return shape_.height; }
    [[nodiscard]] std::size_t width() const noexcept { return shape_.width; }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] double at(std::size_t row, std::size_t col) const { return values_.at(row * shape_.width + col); }

    friend bool operator==(const Heatmap&, const Heatmap&) = default;

private:
    Heatmap(Shape shape, std::vector<double> values) : shape_(shape), values_(std::move(values)) {}

    Shape shape_;
    std::vector<double> values_;
};

/// Builds a Heatmap from nested rows. Throws InputError if the rows are ragged.
Heatmap validate_heatmap(const std::vector<std::vector<double>>& rows);

// ---------------------------------------------------------------------------
// BinaryMask
// ---------------------------------------------------------------------------

class BinaryMask {
public:
    BinaryMask() = default;
    explicit BinaryMask(Shape shape, bool fill = false);
    /// `bits` is row-major; any nonzero byte is foreground.
    BinaryMask(Shape shape, std::vector<std::uint8_t> bits);

    [[nodiscard]] const Shape& shape() const noexcept { return shape_; }
    [[nodiscard]] std::size_t height() const noexcept { return shape_.height; }
    [[nodiscard]] std::size_t width() const noexcept { return shape_.width; }
    [[nodiscard]] std::size_t size() const noexcept { return bits_.size(); }

    [[nodiscard]] bool at(std::size_t row, std::size_t col) const { return bits_.at(row * shape_.width + col) != 0; }
    void set(std::size_t row, std::size_t col, bool value = true) { bits_.at(row * shape_.width + col) = value ? 1 : 0; }

    [[nodiscard]] bool test(std::size_t index) const { return bits_[index] != 0; }
    [[nodiscard]] std::span<const std::uint8_t> bits() const noexcept { return bits_; }

    [[nodiscard]] std::size_t count() const noexcept;
    [[nodiscard]] std::vector<Pixel> foreground() const;

    friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

private:
    Shape shape_;
    std::vector<std::uint8_t> bits_;
};

// ---------------------------------------------------------------------------
// LabelGrid
// ---------------------------------------------------------------------------

/// Non-negative integer labels; 0 is background.
class LabelGrid {
public:
    LabelGrid() = default;
    explicit LabelGrid(Shape shape, std::int32_t fill = 0);
    /// Throws InputError on negative labels or a size mismatch.
    LabelGrid(Shape shape, std::vector<std::int32_t> labels);

    [[nodiscard]] const Shape& shape() const noexcept { return shape_; }
    [[nodiscard]] std::size_t height() const noexcept { return shape_.height; }
    [[nodiscard]] std::size_t width() const noexcept { return shape_.width; }

    [[nodiscard]] std::int32_t at(std::size_t row, std::size_t col) const { return labels_.at(row * shape_.width + col); }
    void set(std::size_t row, std::size_t col, std::int32_t label);

    [[nodiscard]] std::span<const std::int32_t> labels() const noexcept { return labels_; }
    [[nodiscard]] std::int32_t max_label() const noexcept;

    friend bool operator==(const LabelGrid&, const LabelGrid&) = default;

private:
    Shape shape_;
    std::vector<std::int32_t> labels_;
};

// ---------------------------------------------------------------------------
// Atlas
// ---------------------------------------------------------------------------

struct VolumeDims {
    std::size_t x = 0;
    std::size_t y = 0;
    std::size_t z = 0;
    [[nodiscard]] std::size_t voxels() const noexcept { return x * y * z; }
    friend bool operator==(const VolumeDims&, const VolumeDims&) = default;
};

/// Spatial metadata surfaced from the volume header. Not acted upon.
struct VolumeGeometry {
    std::array<float, 3> pixdim{1.0F, 1.0F, 1.0F};
    std::int16_t qform_code = 0;
    std::int16_t sform_code = 0;
    std::array<std::array<float, 4>, 3> srow{};
    friend bool operator==(const VolumeGeometry&, const VolumeGeometry&) = default;
};

/// Labelled 3D volume, x varies fastest (NIfTI storage order).
class Atlas {
public:
    Atlas() = default;
    /// Throws InputError on zero dims, size mismatch or negative labels.
    Atlas(VolumeDims dims, std::vector<std::int32_t> labels, std::map<std::int32_t, std::string> names,
          VolumeGeometry geometry = {});

    [[nodiscard]] const VolumeDims& dims() const noexcept { return dims_; }
    [[nodiscard]] std::int32_t at(std::size_t x, std::size_t y, std::size_t z) const {
        return labels_.at(x + dims_.x * (y + dims_.y * z));
    }
    [[nodiscard]] std::span<const std::int32_t> labels() const noexcept { return labels_; }
    [[nodiscard]] const std::map<std::int32_t, std::string>& names() const noexcept { return names_; }
    [[nodiscard]] const VolumeGeometry& geometry() const noexcept { return geometry_; }

    friend bool operator==(const Atlas&, const Atlas&) = default;

private:
    VolumeDims dims_;
    std::vector<std::int32_t> labels_;
    std::map<std::int32_t, std::string> names_;
    VolumeGeometry geometry_;
};

// ---------------------------------------------------------------------------
// Derived records
// ---------------------------------------------------------------------------

struct RegionDescriptor {
    std::vector<Pixel> coords;  ///< raster order
    BoundingBox bbox;
    std::size_t area = 0;
};

struct CoverageRow {
    std::int32_t label = 0;
    std::string region_name;
    std::size_t voxel_count = 0;
    double percentage = 0.0;  ///< in [0,100]
    friend bool operator==(const CoverageRow&, const CoverageRow&) = default;
};

/// Rows sorted by voxel_count descending, ties by ascending label.
struct CoverageTable {
    std::vector<CoverageRow> rows;
    std::vector<std::string> warnings;

    [[nodiscard]] bool empty() const noexcept { return rows.empty(); }
    [[nodiscard]] std::size_t total_count() const noexcept;
    [[nodiscard]] double percentage_sum() const noexcept;
};

struct SegmentationResult {
    BinaryMask mask;            ///< final post-processed mask
    int alpha_star = 0;         ///< selected percentile
    double threshold_value = 0; ///< percentile(H, alpha_star)
    double search_dsc = 0;      ///< DSC of the raw thresholded mask at alpha_star
    double dsc = 0;             ///< final mask vs reference
    double iou = 0;             ///< final mask vs reference
};

}  // namespace neurolens
