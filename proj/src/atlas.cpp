#include "neurolens/atlas.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/format.h>

namespace neurolens {

LabelGrid extract_slice(const Atlas& atlas, std::size_t z) {
    const auto& d = atlas.dims();
    if (z >= d.z) {
        throw InputError(fmt::format("atlas slice {} out of range [0,{})", z, d.z));
    }
    std::vector<std::int32_t> out(d.x * d.y);
    for (std::size_t x = 0; x < d.x; ++x) {
        for (std::size_t y = 0; y < d.y; ++y) {
            out[x * d.y + y] = atlas.at(x, y, z);
        }
    }
    return LabelGrid({d.x, d.y}, std::move(out));
}

LabelGrid resample_nearest(const LabelGrid& slice, Shape target) {
    if (target.empty()) {
        throw InputError("resample target must be non-empty");
    }
    if (slice.shape().empty()) {
        throw InputError("cannot resample an empty grid");
    }
    const std::size_t src_h = slice.height();
    const std::size_t src_w = slice.width();
    std::vector<std::int32_t> out(target.size());
    for (std::size_t i = 0; i < target.height; ++i) {
        // Integer floor(i * src_h / target_h), exact for any size.
        const std::size_t si = i * src_h / target.height;
        for (std::size_t j = 0; j < target.width; ++j) {
            const std::size_t sj = j * src_w / target.width;
            out[i * target.width + j] = slice.at(si, sj);
        }
    }
    return LabelGrid(target, std::move(out));
}

CoverageTable map_rois(const BinaryMask& mask, const Atlas& atlas, std::size_t z) {
    const LabelGrid resampled = resample_nearest(extract_slice(atlas, z), mask.shape());

    std::map<std::int32_t, std::size_t> counts;
    const auto labels = resampled.labels();
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask.test(i) && labels[i] != 0) {
            ++counts[labels[i]];
        }
    }

    CoverageTable table;
    std::size_t total = 0;
    for (const auto& [label, n] : counts) {
        total += n;
    }
    for (const auto& [label, n] : counts) {
        CoverageRow row;
        row.label = label;
        row.voxel_count = n;
        row.percentage = static_cast<double>(n) / static_cast<double>(total) * 100.0;
        if (auto it = atlas.names().find(label); it != atlas.names().end()) {
            row.region_name = it->second;
        } else {
            row.region_name = fmt::format("UNKNOWN({})", label);
            table.warnings.push_back(fmt::format("atlas label {} has no entry in the name table", label));
        }
        table.rows.push_back(std::move(row));
    }
    // std::map iteration already yields ascending labels, so a stable sort keeps the tie order.
    std::stable_sort(table.rows.begin(), table.rows.end(),
                     [](const CoverageRow& a, const CoverageRow& b) { return a.voxel_count > b.voxel_count; });
    return table;
}

}  // namespace neurolens
