#pragma once

#include <cstddef>

#include "neurolens/core.hpp"

namespace neurolens {

/// Axial plane A[:, :, z]. Rows follow the atlas x axis, columns the y axis.
/// Throws InputError when z is out of range.
LabelGrid extract_slice(const Atlas& atlas, std::size_t z);

/// Nearest-neighbour resampling: out[i][j] = in[floor(i*H/h)][floor(j*W/w)].
/// Only labels present in the input can appear in the output.
LabelGrid resample_nearest(const LabelGrid& slice, Shape target);

/**
 * Tallies the atlas labels under the foreground of `mask` at slice `z`.
 *
 * The slice is resampled to the mask's shape; background (label 0) is
 * discarded; percentages are relative to the remaining count. Rows are sorted
 * by count descending, ties by ascending label. Labels with no entry in the
 * atlas name table are reported as "UNKNOWN(<label>)" plus a warning.
 */
CoverageTable map_rois(const BinaryMask& mask, const Atlas& atlas, std::size_t z);

}  // namespace neurolens
