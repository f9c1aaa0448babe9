#include "neurolens/findings.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "neurolens/resources.hpp"

namespace neurolens {

namespace {

using nlohmann::json;

constexpr int kPercentDecimals = 2;
constexpr int kMetricDecimals = 6;
constexpr int kAlphaDecimals = 2;
constexpr int kConfidenceDecimals = 4;

std::string normalize_token(std::string_view text) {
    std::string out;
    for (char c : text) {
        if (c == ' ' || c == '_' || c == '-') {
            continue;
        }
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

std::string quote(const std::string& s) {
    try {
        return json(s).dump();
    } catch (const json::exception&) {
        throw InputError(fmt::format("string is not valid UTF-8: '{}'", s));
    }
}

const json& findings_schema() {
    static const json schema = json::parse(findings_schema_text());
    return schema;
}

double percentage_tolerance(std::size_t n_regions) {
    return 0.5 * std::pow(10.0, -kPercentDecimals) * static_cast<double>(n_regions) + 1e-6;
}

std::vector<SchemaViolation> semantic_checks(const json& doc) {
    std::vector<SchemaViolation> out;
    const auto& regions = doc.at("regions");
    if (!regions.empty()) {
        double sum = 0;
        for (const auto& r : regions) {
            sum += r.at("percentage").get<double>();
        }
        if (std::abs(sum - 100.0) > percentage_tolerance(regions.size())) {
            out.push_back({"/regions", fmt::format("region percentages sum to {:.6f}, expected 100", sum)});
        }
        for (std::size_t i = 0; i < regions.size(); ++i) {
            if (regions[i].at("label").get<double>() > std::numeric_limits<std::int32_t>::max()) {
                out.push_back({fmt::format("/regions/{}/label", i), "label exceeds the 32-bit range"});
            }
            if (i > 0 && regions[i].at("voxel_count").get<double>() > regions[i - 1].at("voxel_count").get<double>()) {
                out.push_back({fmt::format("/regions/{}/voxel_count", i),
                               "regions must be sorted by voxel_count, largest first"});
            }
        }
    }
    const auto& m = doc.at("segmentation_metrics");
    if (m.at("iou").get<double>() > m.at("dsc").get<double>() + 1e-6) {
        out.push_back({"/segmentation_metrics/iou", "iou cannot exceed dsc"});
    }
    return out;
}

FindingsDocument from_json(const json& doc) {
    FindingsDocument d;
    d.schema_version = doc.at("schema_version").get<std::string>();
    d.model_name = doc.at("model_name").get<std::string>();
    d.predicted_class = parse_tumor_class(doc.at("predicted_class").get<std::string>());
    if (doc.contains("prediction_confidence")) {
        d.prediction_confidence = quantize(doc.at("prediction_confidence").get<double>(), kConfidenceDecimals);
    }
    d.saliency_method = parse_saliency_method(doc.at("saliency_method").get<std::string>());
    for (const auto& r : doc.at("regions")) {
        FindingsRegion region;
        region.name = r.at("name").get<std::string>();
        region.label = static_cast<std::int32_t>(r.at("label").get<double>());
        region.voxel_count = static_cast<std::size_t>(r.at("voxel_count").get<double>());
        region.percentage = quantize(r.at("percentage").get<double>(), kPercentDecimals);
        d.regions.push_back(std::move(region));
    }
    const auto& m = doc.at("segmentation_metrics");
    d.segmentation_metrics.dsc = quantize(m.at("dsc").get<double>(), kMetricDecimals);
    d.segmentation_metrics.iou = quantize(m.at("iou").get<double>(), kMetricDecimals);
    d.segmentation_metrics.alpha_star = quantize(m.at("alpha_star").get<double>(), kAlphaDecimals);
    const auto& p = doc.at("provenance");
    d.provenance.source_image_id = p.at("source_image_id").get<std::string>();
    d.provenance.atlas_id = p.at("atlas_id").get<std::string>();
    d.provenance.slice_index = static_cast<std::size_t>(p.at("slice_index").get<double>());
    d.provenance.created_at = p.at("created_at").get<std::string>();
    if (doc.contains("note")) {
        d.note = doc.at("note").get<std::string>();
    }
    return d;
}

}  // namespace

std::string_view to_string(TumorClass c) {
    switch (c) {
        case TumorClass::Glioma: return "Glioma";
        case TumorClass::Meningioma: return "Meningioma";
        case TumorClass::PituitaryTumor: return "PituitaryTumor";
    }
    return "Glioma";
}

std::string_view to_string(SaliencyMethod m) {
    switch (m) {
        case SaliencyMethod::GradCAM: return "GradCAM";
        case SaliencyMethod::GradCAMpp: return "GradCAMpp";
        case SaliencyMethod::ScoreCAM: return "ScoreCAM";
    }
    return "GradCAM";
}

TumorClass parse_tumor_class(std::string_view text) {
    const std::string t = normalize_token(text);
    if (t == "glioma") return TumorClass::Glioma;
    if (t == "meningioma") return TumorClass::Meningioma;
    if (t == "pituitarytumor" || t == "pituitary" || t == "pituitarytumour") return TumorClass::PituitaryTumor;
    throw InputError(fmt::format("unknown tumor class '{}' (expected Glioma, Meningioma or PituitaryTumor)", text));
}

SaliencyMethod parse_saliency_method(std::string_view text) {
    const std::string t = normalize_token(text);
    if (t == "gradcam") return SaliencyMethod::GradCAM;
    if (t == "gradcampp" || t == "gradcam++") return SaliencyMethod::GradCAMpp;
    if (t == "scorecam") return SaliencyMethod::ScoreCAM;
    throw InputError(fmt::format("unknown saliency method '{}' (expected GradCAM, GradCAMpp or ScoreCAM)", text));
}

double quantize(double value, int decimals) {
    const double scale = std::pow(10.0, decimals);
    return std::round(value * scale) / scale;
}

FindingsDocument build_findings(std::string model_name, TumorClass predicted_class,
                                std::optional<double> prediction_confidence, SaliencyMethod saliency_method,
                                const CoverageTable& coverage, const SegmentationResult& segmentation,
                                Provenance provenance) {
    if (model_name.empty()) {
        throw InputError("model name must not be empty");
    }
    if (prediction_confidence && !(*prediction_confidence >= 0.0 && *prediction_confidence <= 1.0)) {
        throw InputError(fmt::format("prediction confidence {} is outside [0,1]", *prediction_confidence));
    }
    if (!coverage.empty() && std::abs(coverage.percentage_sum() - 100.0) > 1e-6) {
        throw InputError(fmt::format("coverage percentages sum to {}, expected 100", coverage.percentage_sum()));
    }
    if (segmentation.mask.size() > 0 && coverage.total_count() > segmentation.mask.count()) {
        throw InputError(fmt::format("coverage table counts {} pixels but the mask has only {}: not the same sample",
                                     coverage.total_count(), segmentation.mask.count()));
    }
    if (!(segmentation.dsc >= 0.0 && segmentation.dsc <= 1.0 && segmentation.iou >= 0.0 && segmentation.iou <= 1.0)) {
        throw InputError("segmentation dsc/iou must lie in [0,1]");
    }

    FindingsDocument d;
    d.model_name = std::move(model_name);
    d.predicted_class = predicted_class;
    if (prediction_confidence) {
        d.prediction_confidence = quantize(*prediction_confidence, kConfidenceDecimals);
    }
    d.saliency_method = saliency_method;
    for (const auto& row : coverage.rows) {
        d.regions.push_back({row.region_name, row.label, row.voxel_count, quantize(row.percentage, kPercentDecimals)});
    }
    d.segmentation_metrics.dsc = quantize(segmentation.dsc, kMetricDecimals);
    d.segmentation_metrics.iou = quantize(segmentation.iou, kMetricDecimals);
    d.segmentation_metrics.alpha_star = quantize(segmentation.alpha_star, kAlphaDecimals);
    d.provenance = std::move(provenance);
    if (d.regions.empty()) {
        d.note = std::string(kNoOverlapNote);
    }
    return d;
}

std::string serialize_findings(const FindingsDocument& d) {
    std::string out = "{\n";
    out += fmt::format("  \"schema_version\": {},\n", quote(d.schema_version));
    out += fmt::format("  \"model_name\": {},\n", quote(d.model_name));
    out += fmt::format("  \"predicted_class\": \"{}\",\n", to_string(d.predicted_class));
    if (d.prediction_confidence) {
        out += fmt::format("  \"prediction_confidence\": {:.{}f},\n", *d.prediction_confidence, kConfidenceDecimals);
    }
    out += fmt::format("  \"saliency_method\": \"{}\",\n", to_string(d.saliency_method));
    if (d.regions.empty()) {
        out += "  \"regions\": [],\n";
    } else {
        out += "  \"regions\": [\n";
        for (std::size_t i = 0; i < d.regions.size(); ++i) {
            const auto& r = d.regions[i];
            out += "    {\n";
            out += fmt::format("      \"name\": {},\n", quote(r.name));
            out += fmt::format("      \"label\": {},\n", r.label);
            out += fmt::format("      \"voxel_count\": {},\n", r.voxel_count);
            out += fmt::format("      \"percentage\": {:.{}f}\n", r.percentage, kPercentDecimals);
            out += i + 1 < d.regions.size() ? "    },\n" : "    }\n";
        }
        out += "  ],\n";
    }
    const auto& m = d.segmentation_metrics;
    out += "  \"segmentation_metrics\": {\n";
    out += fmt::format("    \"dsc\": {:.{}f},\n", m.dsc, kMetricDecimals);
    out += fmt::format("    \"iou\": {:.{}f},\n", m.iou, kMetricDecimals);
    out += fmt::format("    \"alpha_star\": {:.{}f}\n", m.alpha_star, kAlphaDecimals);
    out += "  },\n";
    const auto& p = d.provenance;
    out += "  \"provenance\": {\n";
    out += fmt::format("    \"source_image_id\": {},\n", quote(p.source_image_id));
    out += fmt::format("    \"atlas_id\": {},\n", quote(p.atlas_id));
    out += fmt::format("    \"slice_index\": {},\n", p.slice_index);
    out += fmt::format("    \"created_at\": {}\n", quote(p.created_at));
    out += d.note ? "  },\n" : "  }\n";
    if (d.note) {
        out += fmt::format("  \"note\": {}\n", quote(*d.note));
    }
    out += "}\n";
    return out;
}

FindingsValidation validate_findings(std::string_view json_text) {
    FindingsValidation result;
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        result.violations.push_back({"", fmt::format("malformed JSON: {}", e.what())});
        return result;
    }
    result.violations = validate_json_schema(doc, findings_schema());
    if (!result.violations.empty()) {
        return result;
    }
    result.violations = semantic_checks(doc);
    if (result.violations.empty()) {
        result.document = from_json(doc);
    }
    return result;
}

FindingsValidationError::FindingsValidationError(std::vector<SchemaViolation> violations)
    : InputError([&] {
          std::string msg = "invalid findings document:";
          for (const auto& v : violations) {
              msg += fmt::format(" [{}] {};", v.path.empty() ? "/" : v.path, v.message);
          }
          return msg;
      }()),
      violations_(std::move(violations)) {}

FindingsDocument parse_findings(std::string_view json_text) {
    auto result = validate_findings(json_text);
    if (!result.ok()) {
        throw FindingsValidationError(std::move(result.violations));
    }
    return std::move(*result.document);
}

}  // namespace neurolens
