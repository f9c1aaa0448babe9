#include "neurolens/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace neurolens {

std::string to_string(const Shape& shape) {
    return fmt::format("{}x{}", shape.height, shape.width);
}

Heatmap Heatmap::from_values(Shape shape, std::vector<double> values) {
    if (shape.empty() || values.empty()) {
        throw InputError("heatmap is empty");
    }
    if (values.size() != shape.size()) {
        throw ShapeMismatch(fmt::format("heatmap has {} values for shape {}", values.size(), to_string(shape)));
    }
    double lo = values.front();
    double hi = values.front();
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw InputError("heatmap contains non-finite values");
        }
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (lo < 0.0 || hi > 1.0) {
        const double range = hi - lo;
        for (double& v : values) {
            v = range > 0.0 ? (v - lo) / range : 0.0;
        }
    }
    return Heatmap(shape, std::move(values));
}

Heatmap validate_heatmap(const std::vector<std::vector<double>>& rows) {
    if (rows.empty() || rows.front().empty()) {
        throw InputError("heatmap is empty");
    }
    const std::size_t width = rows.front().size();
    std::vector<double> flat;
    flat.reserve(rows.size() * width);
    for (const auto& row : rows) {
        if (row.size() != width) {
            throw InputError("heatmap rows are not rectangular");
        }
        flat.insert(flat.end(), row.begin(), row.end());
    }
    return Heatmap::from_values({rows.size(), width}, std::move(flat));
}

BinaryMask::BinaryMask(Shape shape, bool fill) : shape_(shape), bits_(shape.size(), fill ? 1 : 0) {}

BinaryMask::BinaryMask(Shape shape, std::vector<std::uint8_t> bits) : shape_(shape), bits_(std::move(bits)) {
    if (bits_.size() != shape_.size()) {
        throw ShapeMismatch(fmt::format("mask has {} pixels for shape {}", bits_.size(), to_string(shape_)));
    }
    for (auto& b : bits_) {
        b = b != 0 ? 1 : 0;
    }
}

std::size_t BinaryMask::count() const noexcept {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::vector<Pixel> BinaryMask::foreground() const {
    std::vector<Pixel> out;
    for (std::size_t r = 0; r < shape_.height; ++r) {
        for (std::size_t c = 0; c < shape_.width; ++c) {
            if (bits_[r * shape_.width + c] != 0) {
                out.push_back({r, c});
            }
        }
    }
    return out;
}

LabelGrid::LabelGrid(Shape shape, std::int32_t fill) : shape_(shape), labels_(shape.size(), fill) {
    if (fill < 0) {
        throw InputError("labels must be non-negative");
    }
}

LabelGrid::LabelGrid(Shape shape, std::vector<std::int32_t> labels) : shape_(shape), labels_(std::move(labels)) {
    if (labels_.size() != shape_.size()) {
        throw ShapeMismatch(fmt::format("label grid has {} cells for shape {}", labels_.size(), to_string(shape_)));
    }
    if (std::any_of(labels_.begin(), labels_.end(), [](std::int32_t v) { return v < 0; })) {
        throw InputError("labels must be non-negative");
    }
}

void LabelGrid::set(std::size_t row, std::size_t col, std::int32_t label) {
    if (label < 0) {
        throw InputError("labels must be non-negative");
    }
    labels_.at(row * shape_.width + col) = label;
}

std::int32_t LabelGrid::max_label() const noexcept {
    return labels_.empty() ? 0 : *std::max_element(labels_.begin(), labels_.end());
}

Atlas::Atlas(VolumeDims dims, std::vector<std::int32_t> labels, std::map<std::int32_t, std::string> names,
             VolumeGeometry geometry)
    : dims_(dims), labels_(std::move(labels)), names_(std::move(names)), geometry_(geometry) {
    if (dims_.x == 0 || dims_.y == 0 || dims_.z == 0) {
        throw InputError("atlas dimensions must be positive");
    }
    if (labels_.size() != dims_.voxels()) {
        throw ShapeMismatch(fmt::format("atlas has {} voxels for dims {}x{}x{}", labels_.size(), dims_.x, dims_.y,
                                        dims_.z));
    }
    if (std::any_of(labels_.begin(), labels_.end(), [](std::int32_t v) { return v < 0; })) {
        throw InputError("atlas labels must be non-negative");
    }
}

std::size_t CoverageTable::total_count() const noexcept {
    return std::accumulate(rows.begin(), rows.end(), std::size_t{0},
                           [](std::size_t acc, const CoverageRow& r) { return acc + r.voxel_count; });
}

double CoverageTable::percentage_sum() const noexcept {
    return std::accumulate(rows.begin(), rows.end(), 0.0,
                           [](double acc, const CoverageRow& r) { return acc + r.percentage; });
}

}  // namespace neurolens
