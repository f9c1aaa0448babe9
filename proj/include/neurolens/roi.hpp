#pragma once

#include <vector>

#include "neurolens/core.hpp"

namespace neurolens {

/// 4-connected component labelling. Labels 1..K follow raster-scan first encounter.
LabelGrid label_components(const BinaryMask& mask);

/// One descriptor per nonzero label, ordered by ascending label.
std::vector<RegionDescriptor> region_props(const LabelGrid& labels);

/// region_props(label_components(mask)).
std::vector<RegionDescriptor> extract_rois(const BinaryMask& mask);

}  // namespace neurolens
