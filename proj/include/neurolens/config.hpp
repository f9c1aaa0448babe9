#pragma once

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "neurolens/findings.hpp"
#include "neurolens/report.hpp"
#include "neurolens/segmentation.hpp"

namespace neurolens {

/// Classifier output for one sample, as written to pred.json by the model exporter.
struct SampleMetadata {
    std::string model_name = "InceptionResNetV2";
    TumorClass predicted_class = TumorClass::Glioma;
    std::optional<double> confidence;
    SaliencyMethod saliency_method = SaliencyMethod::GradCAMpp;
};

/// Reads {"model_name", "predicted_class", "confidence"} (the last optional).
/// Throws InputError on a malformed file.
SampleMetadata read_prediction_json(const std::filesystem::path& path,
                                    SaliencyMethod method = SaliencyMethod::GradCAMpp);

struct PipelineConfig {
    std::filesystem::path heatmap;
    std::filesystem::path gt_mask;
    std::filesystem::path atlas_volume;
    std::filesystem::path atlas_labels;
    std::filesystem::path prediction;       ///< optional pred.json providing `sample`
    std::filesystem::path output_dir = "neurolens-out";
    SegmentationParams segmentation;
    std::optional<std::size_t> atlas_slice;  ///< mid-slice when unset
    bool offline = false;
    bool skip_report = false;
    LlmEndpointConfig llm;
    SampleMetadata sample;
    std::string sample_id;                  ///< heatmap file stem when empty
    std::optional<std::string> timestamp;   ///< RFC 3339 override for created_at
};

/// Overlays values from a TOML file. Relative paths resolve against the file's
/// directory. Throws InputError on a parse error or a wrongly typed value.
///
///   [inputs]        heatmap, gt_mask, pred
///   [atlas]         volume, labels, slice
///   [segmentation]  alpha_low, alpha_high, min_area, closing_radius, epsilon, tie_break
///   [model]         name, predicted_class, confidence, saliency_method
///   [llm]           base_url, model, timeout, max_retries, temperature, offline
///   [output]        dir, skip_report
void apply_toml_config(PipelineConfig& config, const std::filesystem::path& path);

using EnvLookup = std::function<const char*(const char*)>;

/// Overlays LLM_BASE_URL, LLM_MODEL, LLM_API_KEY, LLM_TIMEOUT and LLM_MAX_RETRIES.
void apply_environment(PipelineConfig& config, const EnvLookup& getenv = [](const char* n) { return std::getenv(n); });

/// created_at for this run: the explicit timestamp, else SOURCE_DATE_EPOCH, else
/// the Unix epoch for offline runs (so they are reproducible), else the current UTC time.
std::string resolve_timestamp(const std::optional<std::string>& explicit_timestamp, bool offline,
                              const EnvLookup& getenv = [](const char* n) { return std::getenv(n); });

/// RFC 3339 UTC rendering of seconds since the epoch.
std::string format_utc(long long seconds_since_epoch);

}  // namespace neurolens
