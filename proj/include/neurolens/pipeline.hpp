#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "neurolens/config.hpp"
#include "neurolens/core.hpp"
#include "neurolens/findings.hpp"
#include "neurolens/report.hpp"
#include "neurolens/text_metrics.hpp"

namespace neurolens {

/// A pipeline failure tagged with the stage that raised it.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& message, bool input_error);
    [[nodiscard]] const std::string& stage() const noexcept { return stage_; }
    /// True when caused by bad input (exit code 2) rather than a processing failure (3).
    [[nodiscard]] bool input_error() const noexcept { return input_error_; }

private:
    std::string stage_;
    bool input_error_;
};

struct ArtifactRecord {
    std::string name;
    std::string sha256;
    std::uintmax_t bytes = 0;
};

struct PipelineResult {
    std::string sample_id;
    SegmentationResult segmentation;
    std::vector<RegionDescriptor> rois;
    std::size_t atlas_slice = 0;
    CoverageTable coverage;
    FindingsDocument findings;
    std::optional<GeneratedReport> report;
    std::vector<GroundingViolation> grounding;
    std::vector<ArtifactRecord> artifacts;  ///< manifest.json excluded
    std::vector<std::string> warnings;
};

/// Receives (sample id, message) progress and warning lines.
using ProgressFn = std::function<void(std::string_view, std::string_view)>;

/// Output file names, in manifest order.
inline constexpr std::string_view kMaskFile = "mask.png";
inline constexpr std::string_view kOverlayFile = "overlay.png";
inline constexpr std::string_view kCoverageFile = "coverage.csv";
inline constexpr std::string_view kFindingsFile = "findings.json";
inline constexpr std::string_view kReportFile = "report.txt";
inline constexpr std::string_view kReportMetricsFile = "report_metrics.json";
inline constexpr std::string_view kManifestFile = "manifest.json";

/**
 * Runs segment -> rois -> map-atlas -> findings -> report -> evaluate for one
 * sample and writes the artifacts plus manifest.json into config.output_dir.
 *
 * Artifacts are first written with a ".partial" suffix and renamed only when
 * every stage has succeeded; on failure the partial files are left in place.
 * Throws StageError.
 */
PipelineResult run_pipeline(const PipelineConfig& config, const ProgressFn& progress = {});

struct BatchOutcome {
    std::string sample_id;
    std::optional<PipelineResult> result;
    std::optional<StageError> error;
};

/**
 * Runs every subdirectory of `batch_dir` as one sample, `jobs` at a time.
 * A sample directory holds heatmap_<method>.npy (or heatmap.npy/.png),
 * gt_mask.png (or .npy) and optionally pred.json. Outputs go to
 * config.output_dir/<sample>. Outcomes are returned in directory-name order.
 */
std::vector<BatchOutcome> run_batch(const PipelineConfig& config, const std::filesystem::path& batch_dir,
                                    unsigned jobs, const ProgressFn& progress = {});

/// {"alpha_star", "threshold_value", "search_dsc", "dsc", "iou", "foreground_pixels", "shape"}.
nlohmann::ordered_json segmentation_json(const SegmentationResult& result);

/// Reads the dsc, iou and alpha_star fields written by segmentation_json.
SegmentationResult read_segmentation_json(const std::filesystem::path& path);

/// ROI list with label, area and bbox; coords included on request.
nlohmann::ordered_json rois_json(const std::vector<RegionDescriptor>& rois, bool with_coords);

/// Text metrics where each undefined value (too few tokens or sentences) is null.
nlohmann::ordered_json text_metrics_json(std::string_view text, const EmbeddingProvider& embedder);

}  // namespace neurolens
