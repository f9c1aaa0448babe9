#include "neurolens/roi.hpp"

#include <algorithm>
#include <vector>

namespace neurolens {

LabelGrid label_components(const BinaryMask& mask) {
    const std::size_t h = mask.height();
    const std::size_t w = mask.width();
    LabelGrid labels(mask.shape());
    std::vector<std::size_t> stack;
    std::int32_t next = 0;

    for (std::size_t start = 0; start < mask.size(); ++start) {
        if (!mask.test(start) || labels.labels()[start] != 0) {
            continue;
        }
        ++next;
        labels.set(start / w, start % w, next);
        stack.push_back(start);
        while (!stack.empty()) {
            const std::size_t idx = stack.back();
            stack.pop_back();
            const std::size_t r = idx / w;
            const std::size_t c = idx % w;
            auto visit = [&](std::size_t rr, std::size_t cc) {
                const std::size_t n = rr * w + cc;
                if (mask.test(n) && labels.labels()[n] == 0) {
                    labels.set(rr, cc, next);
                    stack.push_back(n);
                }
            };
            if (r > 0) visit(r - 1, c);
            if (r + 1 < h) visit(r + 1, c);
            if (c > 0) visit(r, c - 1);
            if (c + 1 < w) visit(r, c + 1);
        }
    }
    return labels;
}

std::vector<RegionDescriptor> region_props(const LabelGrid& labels) {
    const auto k = static_cast<std::size_t>(labels.max_label());
    std::vector<RegionDescriptor> regions(k);
    for (std::size_t r = 0; r < labels.height(); ++r) {
        for (std::size_t c = 0; c < labels.width(); ++c) {
            const auto label = labels.at(r, c);
            if (label == 0) {
                continue;
            }
            auto& region = regions[static_cast<std::size_t>(label) - 1];
            if (region.coords.empty()) {
                region.bbox = {c, r, c, r};
            } else {
                region.bbox.x_min = std::min(region.bbox.x_min, c);
                region.bbox.x_max = std::max(region.bbox.x_max, c);
                region.bbox.y_min = std::min(region.bbox.y_min, r);
                region.bbox.y_max = std::max(region.bbox.y_max, r);
            }
            region.coords.push_back({r, c});
        }
    }
    // Labels that never occur (possible for hand-made grids) yield no descriptor.
    std::erase_if(regions, [](const RegionDescriptor& d) { return d.coords.empty(); });
    for (auto& region : regions) {
        region.area = region.coords.size();
    }
    return regions;
}

std::vector<RegionDescriptor> extract_rois(const BinaryMask& mask) {
    return region_props(label_components(mask));
}

}  // namespace neurolens
