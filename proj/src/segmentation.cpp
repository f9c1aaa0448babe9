#include "neurolens/segmentation.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "neurolens/roi.hpp"

namespace neurolens {

namespace {

void require_same_shape(const BinaryMask& a, const BinaryMask& b) {
    if (a.shape() != b.shape()) {
        throw ShapeMismatch(fmt::format("mask shapes differ: {} vs {}", to_string(a.shape()), to_string(b.shape())));
    }
}

std::size_t intersection_count(const BinaryMask& a, const BinaryMask& b) {
    const auto ab = a.bits();
    const auto bb = b.bits();
    std::size_t n = 0;
    for (std::size_t i = 0; i < ab.size(); ++i) {
        n += static_cast<std::size_t>(ab[i] & bb[i]);
    }
    return n;
}

double dice_from_counts(std::size_t inter, std::size_t a, std::size_t b, double epsilon) {
    return (2.0 * static_cast<double>(inter) + epsilon) / (static_cast<double>(a + b) + epsilon);
}

std::size_t percentile_rank(std::size_t n, double alpha) {
    std::size_t rank = 0;
    if (alpha == std::floor(alpha)) {
        const auto a = static_cast<std::size_t>(std::max(0.0, alpha));
        rank = (a * n + 99) / 100;
    } else {
        rank = static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(n) / 100.0));
    }
    return std::clamp<std::size_t>(rank, 1, n);
}

}  // namespace

void SegmentationParams::validate() const {
    if (alpha_low < 0 || alpha_high > 100 || alpha_low > alpha_high) {
        throw InputError(fmt::format("alpha range {}:{} must satisfy 0 <= low <= high <= 100", alpha_low, alpha_high));
    }
    if (min_area < 0) {
        throw InputError("min_area must be >= 0");
    }
    if (closing_radius < 0) {
        throw InputError("closing radius must be >= 0");
    }
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
        throw InputError("epsilon must be > 0");
    }
}

double percentile_sorted(std::span<const double> sorted, double alpha) {
    if (sorted.empty()) {
        throw InputError("percentile of an empty heatmap");
    }
    if (!(alpha >= 0.0 && alpha <= 100.0)) {
        throw InputError(fmt::format("percentile {} outside [0,100]", alpha));
    }
    return sorted[percentile_rank(sorted.size(), alpha) - 1];
}

double percentile(const Heatmap& heatmap, double alpha) {
    std::vector<double> sorted(heatmap.values().begin(), heatmap.values().end());
    std::sort(sorted.begin(), sorted.end());
    return percentile_sorted(sorted, alpha);
}

BinaryMask threshold_at(const Heatmap& heatmap, double alpha) {
    const double t = percentile(heatmap, alpha);
    std::vector<std::uint8_t> bits(heatmap.size());
    const auto values = heatmap.values();
    std::transform(values.begin(), values.end(), bits.begin(), [t](double v) { return v >= t ? 1 : 0; });
    return BinaryMask(heatmap.shape(), std::move(bits));
}

double dice(const BinaryMask& a, const BinaryMask& b, double epsilon) {
    require_same_shape(a, b);
    return dice_from_counts(intersection_count(a, b), a.count(), b.count(), epsilon);
}

double iou(const BinaryMask& a, const BinaryMask& b) {
    require_same_shape(a, b);
    const std::size_t inter = intersection_count(a, b);
    const std::size_t uni = a.count() + b.count() - inter;
    if (uni == 0) {
        return 1.0;
    }
    return static_cast<double>(inter) / static_cast<double>(uni);
}

BinaryMask remove_small_objects(const BinaryMask& mask, int min_area) {
    if (min_area <= 1) {
        return mask;
    }
    const LabelGrid labels = label_components(mask);
    std::vector<std::size_t> areas(static_cast<std::size_t>(labels.max_label()) + 1, 0);
    for (auto label : labels.labels()) {
        ++areas[static_cast<std::size_t>(label)];
    }
    std::vector<std::uint8_t> bits(mask.size(), 0);
    const auto lab = labels.labels();
    for (std::size_t i = 0; i < bits.size(); ++i) {
        const auto k = static_cast<std::size_t>(lab[i]);
        bits[i] = (k != 0 && areas[k] >= static_cast<std::size_t>(min_area)) ? 1 : 0;
    }
    return BinaryMask(mask.shape(), std::move(bits));
}

StructuringElement disk(int radius) {
    if (radius < 0) {
        throw InputError("disk radius must be >= 0");
    }
    StructuringElement element;
    const int r2 = radius * radius;
    for (int i = -radius; i <= radius; ++i) {
        for (int j = -radius; j <= radius; ++j) {
            if (i * i + j * j <= r2) {
                element.push_back({i, j});
            }
        }
    }
    return element;
}

BinaryMask dilate(const BinaryMask& mask, const StructuringElement& element) {
    const auto h = static_cast<long>(mask.height());
    const auto w = static_cast<long>(mask.width());
    BinaryMask out(mask.shape());
    for (long r = 0; r < h; ++r) {
        for (long c = 0; c < w; ++c) {
            if (!mask.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c))) {
                continue;
            }
            for (const auto& o : element) {
                const long rr = r + o.drow;
                const long cc = c + o.dcol;
                if (rr >= 0 && rr < h && cc >= 0 && cc < w) {
                    out.set(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc));
                }
            }
        }
    }
    return out;
}

BinaryMask erode(const BinaryMask& mask, const StructuringElement& element) {
    const auto h = static_cast<long>(mask.height());
    const auto w = static_cast<long>(mask.width());
    BinaryMask out(mask.shape());
    for (long r = 0; r < h; ++r) {
        for (long c = 0; c < w; ++c) {
            bool keep = true;
            for (const auto& o : element) {
                const long rr = r + o.drow;
                const long cc = c + o.dcol;
                if (rr >= 0 && rr < h && cc >= 0 && cc < w &&
                    !mask.at(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc))) {
                    keep = false;
                    break;
                }
            }
            if (keep) {
                out.set(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
            }
        }
    }
    return out;
}

BinaryMask closing(const BinaryMask& mask, const StructuringElement& element) {
    return erode(dilate(mask, element), element);
}

SegmentationResult segment_heatmap(const Heatmap& heatmap, const BinaryMask& reference,
                                   const SegmentationParams& params) {
    params.validate();
    if (heatmap.shape() != reference.shape()) {
        throw ShapeMismatch(fmt::format("heatmap {} and reference mask {} differ in shape",
                                        to_string(heatmap.shape()), to_string(reference.shape())));
    }

    std::vector<double> sorted(heatmap.values().begin(), heatmap.values().end());
    std::sort(sorted.begin(), sorted.end());

    const auto values = heatmap.values();
    const auto ref = reference.bits();
    const std::size_t ref_count = reference.count();

    int best_alpha = params.alpha_low;
    double best_dsc = -1.0;
    for (int alpha = params.alpha_low; alpha <= params.alpha_high; ++alpha) {
        const double t = percentile_sorted(sorted, alpha);
        std::size_t fg = 0;
        std::size_t inter = 0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (values[i] >= t) {
                ++fg;
                inter += ref[i];
            }
        }
        const double d = dice_from_counts(inter, fg, ref_count, params.epsilon);
        const bool better = params.tie_break == TieBreak::LowestAlpha ? d > best_dsc : d >= best_dsc;
        if (better) {
            best_dsc = d;
            best_alpha = alpha;
        }
    }

    SegmentationResult result;
    result.alpha_star = best_alpha;
    result.threshold_value = percentile_sorted(sorted, best_alpha);
    result.search_dsc = best_dsc;

    std::vector<std::uint8_t> bits(values.size());
    std::transform(values.begin(), values.end(), bits.begin(),
                   [t = result.threshold_value](double v) { return v >= t ? 1 : 0; });
    BinaryMask raw(heatmap.shape(), std::move(bits));

    result.mask = closing(remove_small_objects(raw, params.min_area), disk(params.closing_radius));
    result.dsc = dice(result.mask, reference, params.epsilon);
    result.iou = iou(result.mask, reference);
    return result;
}

}  // namespace neurolens
