#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "neurolens/core.hpp"
#include "neurolens/json_schema.hpp"

namespace neurolens {

enum class TumorClass { Glioma, Meningioma, PituitaryTumor };
enum class SaliencyMethod { GradCAM, GradCAMpp, ScoreCAM };

/// Canonical spellings used in documents: "Glioma", "Meningioma", "PituitaryTumor".
std::string_view to_string(TumorClass c);
/// "GradCAM", "GradCAMpp", "ScoreCAM".
std::string_view to_string(SaliencyMethod m);

/// Case-insensitive; also accepts "pituitary", "pituitary_tumor", "pituitary tumor".
/// Throws InputError on anything else.
TumorClass parse_tumor_class(std::string_view text);
/// Case-insensitive; also accepts "grad-cam", "gradcam++", "grad-cam++", "score-cam".
SaliencyMethod parse_saliency_method(std::string_view text);

inline constexpr std::string_view kFindingsSchemaVersion = "1.0";
inline constexpr std::string_view kNoOverlapNote = "no atlas-region overlap";

struct FindingsRegion {
    std::string name;
    std::int32_t label = 0;
    std::size_t voxel_count = 0;
    double percentage = 0;
    friend bool operator==(const FindingsRegion&, const FindingsRegion&) = default;
};

struct FindingsMetrics {
    double dsc = 0;
    double iou = 0;
    double alpha_star = 0;
    friend bool operator==(const FindingsMetrics&, const FindingsMetrics&) = default;
};

struct Provenance {
    std::string source_image_id;
    std::string atlas_id;
    std::size_t slice_index = 0;
    std::string created_at;  ///< RFC 3339, e.g. "2024-05-01T12:00:00Z"
    friend bool operator==(const Provenance&, const Provenance&) = default;
};

/**
 * Structured evidence handed to the report generator.
 *
 * Numbers are stored at their serialized precision (percentages 2 decimals,
 * metrics 6, alpha_star 2, confidence 4) so that serialize/parse round-trips
 * exactly.
 */
struct FindingsDocument {
    std::string schema_version{kFindingsSchemaVersion};
    std::string model_name;
    TumorClass predicted_class = TumorClass::Glioma;
    std::optional<double> prediction_confidence;
    SaliencyMethod saliency_method = SaliencyMethod::GradCAMpp;
    std::vector<FindingsRegion> regions;
    FindingsMetrics segmentation_metrics;
    Provenance provenance;
    std::optional<std::string> note;
    friend bool operator==(const FindingsDocument&, const FindingsDocument&) = default;
};

/// Rounds half away from zero to `decimals` places.
double quantize(double value, int decimals);

/**
 * Assembles a document from one sample's coverage table and segmentation.
 * Regions keep the table order. An empty table yields regions [] and the
 * kNoOverlapNote note. Throws InputError on an empty model name, a confidence
 * outside [0,1], or a coverage table whose percentages do not sum to 100.
 */
FindingsDocument build_findings(std::string model_name, TumorClass predicted_class,
                                std::optional<double> prediction_confidence, SaliencyMethod saliency_method,
                                const CoverageTable& coverage, const SegmentationResult& segmentation,
                                Provenance provenance);

/// Canonical UTF-8 JSON: fixed key order, two-space indent, fixed decimals,
/// trailing newline. Identical documents give identical bytes.
std::string serialize_findings(const FindingsDocument& document);

struct FindingsValidation {
    std::optional<FindingsDocument> document;
    std::vector<SchemaViolation> violations;
    [[nodiscard]] bool ok() const noexcept { return violations.empty(); }
};

/// Parses and checks against the shipped schema, then checks that region
/// percentages sum to 100 (within rounding) and iou <= dsc. Malformed JSON is
/// reported as a single violation at path "".
FindingsValidation validate_findings(std::string_view json_text);

/// Thrown by parse_findings; carries every violation.
class FindingsValidationError : public InputError {
public:
    explicit FindingsValidationError(std::vector<SchemaViolation> violations);
    [[nodiscard]] const std::vector<SchemaViolation>& violations() const noexcept { return violations_; }

private:
    std::vector<SchemaViolation> violations_;
};

/// validate_findings that throws FindingsValidationError on failure.
FindingsDocument parse_findings(std::string_view json_text);

}  // namespace neurolens
