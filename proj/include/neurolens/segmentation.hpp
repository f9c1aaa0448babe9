#pragma once

#include <vector>

#include "neurolens/core.hpp"

namespace neurolens {

/// Which alpha wins when several reach the same DSC during the search.
enum class TieBreak {
    LowestAlpha,   ///< larger mask, favours recall
    HighestAlpha,
};

struct SegmentationParams {
    int alpha_low = 70;
    int alpha_high = 97;
    int min_area = 50;       ///< components smaller than this are dropped
    int closing_radius = 3;
    double epsilon = 1e-6;   ///< Dice smoothing
    TieBreak tie_break = TieBreak::LowestAlpha;

    /// Throws InputError when a field is out of range.
    void validate() const;
};

/// Offset of a structuring-element member relative to its origin.
struct Offset {
    int drow = 0;
    int dcol = 0;
    friend auto operator<=>(const Offset&, const Offset&) = default;
};

using StructuringElement = std::vector<Offset>;

/// The ceil(alpha*N/100)-th smallest value (1-indexed); alpha = 0 clamps to the minimum.
double percentile(const Heatmap& heatmap, double alpha);

/// Same as percentile() but over values already sorted ascending.
double percentile_sorted(std::span<const double> sorted, double alpha);

/// Foreground iff value >= percentile(heatmap, alpha).
BinaryMask threshold_at(const Heatmap& heatmap, double alpha);

/// (2|A∩B| + eps) / (|A| + |B| + eps). Throws ShapeMismatch.
double dice(const BinaryMask& a, const BinaryMask& b, double epsilon);

/// |A∩B| / |A∪B|, 1 when both are empty. Throws ShapeMismatch.
double iou(const BinaryMask& a, const BinaryMask& b);

/// Drops every 4-connected component whose area is below min_area.
BinaryMask remove_small_objects(const BinaryMask& mask, int min_area);

/// All integer offsets within Euclidean distance `radius` of the origin.
StructuringElement disk(int radius);

/// Pixels outside the grid are background.
BinaryMask dilate(const BinaryMask& mask, const StructuringElement& element);

/// Pixels outside the grid are foreground, so erosion never eats into the border.
BinaryMask erode(const BinaryMask& mask, const StructuringElement& element);

/// Dilation followed by erosion. Extensive and idempotent.
BinaryMask closing(const BinaryMask& mask, const StructuringElement& element);

/**
 * Adaptive percentile thresholding followed by morphological clean-up.
 *
 * Every integer alpha in [alpha_low, alpha_high] is scored by the DSC of the
 * raw thresholded mask against `reference`; the best one is post-processed by
 * remove_small_objects and closing(disk(r)). The reported dsc/iou describe the
 * final mask.
 *
 * Throws ShapeMismatch if the shapes differ, InputError on bad params.
 */
SegmentationResult segment_heatmap(const Heatmap& heatmap, const BinaryMask& reference,
                                   const SegmentationParams& params = {});

}  // namespace neurolens
