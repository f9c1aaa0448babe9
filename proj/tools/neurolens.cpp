// neurolens: saliency heatmap -> tumor mask -> atlas regions -> findings -> report.
//
// Exit codes: 0 success, 2 input error (bad flags, missing or malformed files),
// 3 processing error. Failures print one line to stderr:
//   error[input]: ...            error[input:<stage>]: ...
//   error[processing]: ...       error[processing:<stage>]: ...

#include <algorithm>
#include <cstdio>
#include <functional>
#include <iostream>
#include <iterator>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "neurolens/atlas.hpp"
#include "neurolens/classification.hpp"
#include "neurolens/config.hpp"
#include "neurolens/findings.hpp"
#include "neurolens/io/csv.hpp"
#include "neurolens/io/file.hpp"
#include "neurolens/io/imaging.hpp"
#include "neurolens/io/nifti.hpp"
#include "neurolens/pipeline.hpp"
#include "neurolens/report.hpp"
#include "neurolens/roi.hpp"
#include "neurolens/segmentation.hpp"
#include "neurolens/text_metrics.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace neurolens;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitProcessing = 3;

std::string one_line(std::string s) {
    std::replace(s.begin(), s.end(), '\n', ' ');
    std::replace(s.begin(), s.end(), '\r', ' ');
    return s;
}

void emit(const fs::path& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        std::cout.flush();
    } else {
        io::write_text_file(path, text);
    }
}

std::pair<int, int> parse_alpha_range(const std::string& text) {
    const auto colon = text.find(':');
    try {
        if (colon == std::string::npos) {
            throw std::invalid_argument("missing ':'");
        }
        std::size_t used_lo = 0;
        std::size_t used_hi = 0;
        const std::string lo = text.substr(0, colon);
        const std::string hi = text.substr(colon + 1);
        const int a = std::stoi(lo, &used_lo);
        const int b = std::stoi(hi, &used_hi);
        if (used_lo != lo.size() || used_hi != hi.size()) {
            throw std::invalid_argument("trailing characters");
        }
        return {a, b};
    } catch (const std::exception&) {
        throw InputError(fmt::format("--alpha-range expects LOW:HIGH, e.g. 70:97, got '{}'", text));
    }
}

/// Segmentation flags shared by `segment` and `pipeline`; applied only when given.
struct SegmentationFlags {
    std::string alpha_range;
    int min_area = 0;
    int closing_radius = 0;
    double epsilon = 0;
    std::string tie_break;
    CLI::Option* alpha_opt = nullptr;
    CLI::Option* min_area_opt = nullptr;
    CLI::Option* radius_opt = nullptr;
    CLI::Option* epsilon_opt = nullptr;
    CLI::Option* tie_opt = nullptr;

    void add(CLI::App* cmd) {
        alpha_opt = cmd->add_option("--alpha-range", alpha_range, "Integer percentile search range LOW:HIGH (default 70:97)");
        min_area_opt = cmd->add_option("--min-area", min_area, "Drop components smaller than this many pixels (default 50)");
        radius_opt = cmd->add_option("--closing-radius", closing_radius, "Disk radius for morphological closing (default 3)");
        epsilon_opt = cmd->add_option("--epsilon", epsilon, "Dice smoothing constant (default 1e-6)");
        tie_opt = cmd->add_option("--tie-break", tie_break, "Alpha preferred on equal DSC: lowest or highest (default lowest)")
                      ->check(CLI::IsMember({"lowest", "highest"}));
    }

    void apply(SegmentationParams& p) const {
        if (*alpha_opt) {
            std::tie(p.alpha_low, p.alpha_high) = parse_alpha_range(alpha_range);
        }
        if (*min_area_opt) p.min_area = min_area;
        if (*radius_opt) p.closing_radius = closing_radius;
        if (*epsilon_opt) p.epsilon = epsilon;
        if (*tie_opt) p.tie_break = tie_break == "highest" ? TieBreak::HighestAlpha : TieBreak::LowestAlpha;
    }
};

/// LLM endpoint flags shared by `report` and `pipeline`.
struct LlmFlags {
    std::string base_url;
    std::string model;
    double timeout = 0;
    int max_retries = 0;
    double temperature = 0;
    CLI::Option* url_opt = nullptr;
    CLI::Option* model_opt = nullptr;
    CLI::Option* timeout_opt = nullptr;
    CLI::Option* retries_opt = nullptr;
    CLI::Option* temperature_opt = nullptr;

    void add(CLI::App* cmd) {
        url_opt = cmd->add_option("--llm-base-url", base_url, "Chat-completions endpoint base URL (env LLM_BASE_URL)");
        model_opt = cmd->add_option("--llm-model", model, "Model identifier sent to the endpoint (env LLM_MODEL)");
        timeout_opt = cmd->add_option("--llm-timeout", timeout, "Per-request timeout in seconds (default 60)");
        retries_opt = cmd->add_option("--llm-max-retries", max_retries, "Retries on transient failures (default 3)");
        temperature_opt = cmd->add_option("--temperature", temperature, "Sampling temperature (default 0.2)");
    }

    void apply(LlmEndpointConfig& cfg) const {
        if (*url_opt) cfg.base_url = base_url;
        if (*model_opt) cfg.model_id = model;
        if (*timeout_opt) cfg.timeout_seconds = timeout;
        if (*retries_opt) cfg.max_retries = max_retries;
        if (*temperature_opt) cfg.temperature = temperature;
    }
};

/// Classifier metadata flags shared by `findings` and `pipeline`.
struct ModelFlags {
    std::string model_name;
    std::string predicted_class;
    double confidence = 0;
    std::string saliency_method;
    fs::path pred;
    CLI::Option* name_opt = nullptr;
    CLI::Option* class_opt = nullptr;
    CLI::Option* confidence_opt = nullptr;
    CLI::Option* method_opt = nullptr;
    CLI::Option* pred_opt = nullptr;

    void add(CLI::App* cmd) {
        name_opt = cmd->add_option("--model-name", model_name, "Classification backbone (default InceptionResNetV2)");
        class_opt = cmd->add_option("--predicted-class", predicted_class, "Glioma, Meningioma or PituitaryTumor");
        confidence_opt = cmd->add_option("--confidence", confidence, "Prediction confidence in [0,1]");
        method_opt = cmd->add_option("--saliency-method", saliency_method, "GradCAM, GradCAMpp or ScoreCAM (default GradCAMpp)");
        pred_opt = cmd->add_option("--pred", pred, "pred.json with model_name, predicted_class, confidence");
    }

    /// pred.json first, then explicit flags on top.
    void apply(SampleMetadata& meta, const fs::path& pred_from_config = {}) const {
        if (*method_opt) meta.saliency_method = parse_saliency_method(saliency_method);
        const fs::path pred_path = *pred_opt ? pred : pred_from_config;
        if (!pred_path.empty()) {
            const SaliencyMethod method = meta.saliency_method;
            meta = read_prediction_json(pred_path, method);
        }
        if (*name_opt) meta.model_name = model_name;
        if (*class_opt) meta.predicted_class = parse_tumor_class(predicted_class);
        if (*confidence_opt) meta.confidence = confidence;
    }
};

std::shared_ptr<spdlog::logger> make_logger(bool quiet, bool verbose) {
    auto logger = spdlog::stderr_color_mt("neurolens");
    logger->set_pattern("[%l] %v");
    logger->set_level(quiet ? spdlog::level::warn : (verbose ? spdlog::level::debug : spdlog::level::info));
    return logger;
}

std::size_t resolve_slice(const Atlas& atlas, CLI::Option* opt, std::size_t value, spdlog::logger& log) {
    if (*opt) {
        if (value >= atlas.dims().z) {
            throw InputError(fmt::format("--atlas-slice {} is out of range: the atlas has {} axial slices", value,
                                         atlas.dims().z));
        }
        return value;
    }
    const std::size_t mid = atlas.dims().z / 2;
    log.warn("no --atlas-slice given, using the mid-slice {}", mid);
    return mid;
}

ConfusionMatrix read_confusion_csv(const fs::path& path) {
    const auto rows = io::parse_csv(io::read_text_file(path));
    if (rows.size() < 2) {
        throw FormatError(fmt::format("'{}': expected a header row and one row per class", path.string()));
    }
    std::vector<std::string> classes(rows[0].begin() + 1, rows[0].end());
    std::vector<std::vector<std::uint64_t>> counts;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() == 1 && rows[i][0].empty()) {
            continue;
        }
        if (rows[i].size() != classes.size() + 1) {
            throw FormatError(fmt::format("'{}' line {}: expected {} counts", path.string(), i + 1, classes.size()));
        }
        std::vector<std::uint64_t> row;
        for (std::size_t j = 1; j < rows[i].size(); ++j) {
            try {
                std::size_t used = 0;
                const auto v = std::stoull(rows[i][j], &used);
                if (used != rows[i][j].size() || rows[i][j].front() == '-') {
                    throw std::invalid_argument("not a count");
                }
                row.push_back(v);
            } catch (const std::exception&) {
                throw FormatError(fmt::format("'{}' line {}: '{}' is not a count", path.string(), i + 1, rows[i][j]));
            }
        }
        counts.push_back(std::move(row));
    }
    return ConfusionMatrix(std::move(classes), std::move(counts));
}

ordered_json report_audit_json(const GeneratedReport& report, const std::vector<GroundingViolation>& violations) {
    ordered_json j;
    j["model_id"] = report.model_id;
    j["retries"] = report.retries;
    j["prompt_sha256"] = report.prompt_hash;
    j["findings_sha256"] = report.findings_hash;
    j["created_at"] = report.created_at;
    ordered_json list = ordered_json::array();
    for (const auto& v : violations) {
        list.push_back({{"kind", to_string(v.kind)}, {"excerpt", v.excerpt}, {"message", v.message}});
    }
    j["grounding_violations"] = std::move(list);
    return j;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Turn CNN saliency heatmaps of brain MRI into atlas-grounded findings and reports."};
    app.require_subcommand(1);
    app.fallthrough();
    bool quiet = false;
    bool verbose = false;
    app.add_flag("-q,--quiet", quiet, "Only log warnings and errors");
    app.add_flag("-v,--verbose", verbose, "Log debug details");

    std::function<int()> action;
    std::shared_ptr<spdlog::logger> log;

    // ---- segment ----------------------------------------------------------
    auto* segment = app.add_subcommand("segment", "Adaptive percentile thresholding of a heatmap against a ground-truth mask");
    fs::path seg_heatmap;
    fs::path seg_gt;
    fs::path seg_out_mask;
    fs::path seg_metrics;
    fs::path seg_overlay;
    SegmentationFlags seg_flags;
    segment->add_option("--heatmap", seg_heatmap, "Heatmap (.npy float or grayscale .png)")->required();
    segment->add_option("--gt-mask", seg_gt, "Ground-truth mask (.png > 127 or .npy)")->required();
    segment->add_option("--out-mask", seg_out_mask, "Output mask PNG")->required();
    segment->add_option("--metrics", seg_metrics, "Output metrics JSON (default: stdout)");
    segment->add_option("--overlay", seg_overlay, "Optional overlay PNG");
    seg_flags.add(segment);
    segment->callback([&] {
        action = [&] {
            SegmentationParams params;
            seg_flags.apply(params);
            const Heatmap heatmap = io::read_heatmap(seg_heatmap);
            const BinaryMask gt = io::read_mask(seg_gt);
            const SegmentationResult result = segment_heatmap(heatmap, gt, params);
            io::write_mask_png(seg_out_mask, result.mask);
            if (!seg_overlay.empty()) {
                io::write_overlay(seg_overlay, heatmap, result.mask);
            }
            emit(seg_metrics, segmentation_json(result).dump(2) + "\n");
            log->info("alpha*={} dsc={:.6f} iou={:.6f}", result.alpha_star, result.dsc, result.iou);
            return kExitOk;
        };
    });

    // ---- rois -------------------------------------------------------------
    auto* rois = app.add_subcommand("rois", "Connected-component ROIs (4-adjacency) of a binary mask");
    fs::path rois_mask;
    fs::path rois_out;
    bool rois_coords = false;
    rois->add_option("--mask", rois_mask, "Binary mask (.png or .npy)")->required();
    rois->add_option("--out", rois_out, "Output JSON (default: stdout)");
    rois->add_flag("--with-coords", rois_coords, "Include every pixel coordinate");
    rois->callback([&] {
        action = [&] {
            const auto regions = extract_rois(io::read_mask(rois_mask));
            emit(rois_out, rois_json(regions, rois_coords).dump(2) + "\n");
            return kExitOk;
        };
    });

    // ---- map-atlas --------------------------------------------------------
    auto* map_atlas = app.add_subcommand("map-atlas", "Per-region coverage of a mask on an atlas slice");
    fs::path map_mask;
    fs::path map_volume;
    fs::path map_labels;
    std::size_t map_slice = 0;
    fs::path map_out;
    map_atlas->add_option("--mask", map_mask, "Binary mask (.png or .npy)")->required();
    map_atlas->add_option("--atlas-volume", map_volume, "NIfTI-1 label volume (.nii, .nii.gz, .hdr/.img)")->required();
    map_atlas->add_option("--atlas-labels", map_labels, "Label table (index,name CSV or atlas XML)")->required();
    auto* map_slice_opt = map_atlas->add_option("--atlas-slice", map_slice, "Axial slice index (default: mid-slice)");
    map_atlas->add_option("--out", map_out, "Output coverage CSV (default: stdout)");
    map_atlas->callback([&] {
        action = [&] {
            const BinaryMask mask = io::read_mask(map_mask);
            const Atlas atlas = io::read_atlas(map_volume, map_labels);
            const std::size_t z = resolve_slice(atlas, map_slice_opt, map_slice, *log);
            const CoverageTable table = map_rois(mask, atlas, z);
            for (const auto& w : table.warnings) {
                log->warn("{}", w);
            }
            emit(map_out, io::format_coverage_csv(table));
            return kExitOk;
        };
    });

    // ---- findings ---------------------------------------------------------
    auto* findings = app.add_subcommand("findings", "Build or validate a findings JSON document");
    fs::path fnd_validate;
    fs::path fnd_coverage;
    fs::path fnd_segmentation;
    std::string fnd_source_id;
    std::string fnd_atlas_id;
    std::size_t fnd_slice = 0;
    std::string fnd_timestamp;
    fs::path fnd_out;
    ModelFlags fnd_model;
    findings->add_option("--validate", fnd_validate, "Validate an existing document instead of building one");
    findings->add_option("--coverage", fnd_coverage, "Coverage CSV from map-atlas");
    findings->add_option("--segmentation", fnd_segmentation, "Metrics JSON from segment");
    findings->add_option("--source-image-id", fnd_source_id, "Identifier of the source image");
    findings->add_option("--atlas-id", fnd_atlas_id, "Identifier of the atlas");
    findings->add_option("--slice-index", fnd_slice, "Atlas slice used for the coverage table");
    auto* fnd_timestamp_opt = findings->add_option("--timestamp", fnd_timestamp, "created_at value (RFC 3339)");
    findings->add_option("--out", fnd_out, "Output JSON (default: stdout)");
    fnd_model.add(findings);
    findings->callback([&] {
        action = [&] {
            if (!fnd_validate.empty()) {
                const auto result = validate_findings(io::read_text_file(fnd_validate));
                for (const auto& v : result.violations) {
                    std::cout << (v.path.empty() ? "/" : v.path) << ": " << v.message << "\n";
                }
                if (!result.ok()) {
                    throw FindingsValidationError(result.violations);
                }
                std::cout << "valid\n";
                return kExitOk;
            }
            for (const auto& [name, missing] :
                 {std::pair{"--coverage", fnd_coverage.empty()}, std::pair{"--segmentation", fnd_segmentation.empty()},
                  std::pair{"--source-image-id", fnd_source_id.empty()}, std::pair{"--atlas-id", fnd_atlas_id.empty()}}) {
                if (missing) {
                    throw InputError(fmt::format("{} is required when building a findings document", name));
                }
            }
            SampleMetadata meta;
            fnd_model.apply(meta);
            const CoverageTable coverage = io::read_coverage_csv(fnd_coverage);
            const SegmentationResult seg = read_segmentation_json(fnd_segmentation);
            const std::optional<std::string> ts =
                *fnd_timestamp_opt ? std::optional<std::string>(fnd_timestamp) : std::nullopt;
            Provenance provenance{fnd_source_id, fnd_atlas_id, fnd_slice, resolve_timestamp(ts, false)};
            const auto doc = build_findings(meta.model_name, meta.predicted_class, meta.confidence,
                                            meta.saliency_method, coverage, seg, std::move(provenance));
            emit(fnd_out, serialize_findings(doc));
            return kExitOk;
        };
    });

    // ---- report -----------------------------------------------------------
    auto* report = app.add_subcommand("report", "Generate a narrative report from a findings document");
    fs::path rep_findings;
    bool rep_offline = false;
    fs::path rep_out;
    fs::path rep_audit;
    std::string rep_timestamp;
    LlmFlags rep_llm;
    report->add_option("--findings", rep_findings, "Findings JSON")->required();
    report->add_flag("--offline", rep_offline, "Use the deterministic template instead of an LLM endpoint");
    report->add_option("--out", rep_out, "Output report text (default: stdout)");
    report->add_option("--audit", rep_audit, "Write hashes and grounding violations as JSON");
    auto* rep_timestamp_opt = report->add_option("--timestamp", rep_timestamp, "created_at value (RFC 3339)");
    rep_llm.add(report);
    report->callback([&] {
        action = [&] {
            const FindingsDocument doc = parse_findings(io::read_text_file(rep_findings));
            PipelineConfig cfg;
            apply_environment(cfg);
            rep_llm.apply(cfg.llm);
            const std::optional<std::string> ts =
                *rep_timestamp_opt ? std::optional<std::string>(rep_timestamp) : std::nullopt;
            const std::string created_at = resolve_timestamp(ts, rep_offline);
            const GeneratedReport generated =
                rep_offline ? generate_stub_report(doc, created_at) : generate_report(doc, cfg.llm, created_at);
            const auto violations = ground_check(generated, doc);
            for (const auto& v : violations) {
                log->warn("grounding: {}", v.message);
            }
            emit(rep_out, generated.text);
            if (!rep_audit.empty()) {
                io::write_text_file(rep_audit, report_audit_json(generated, violations).dump(2) + "\n");
            }
            return kExitOk;
        };
    });

    // ---- evaluate-text ----------------------------------------------------
    auto* evaluate = app.add_subcommand("evaluate-text", "TTR, Maas, FRES and coherence of report texts");
    std::vector<fs::path> eval_inputs;
    fs::path eval_out;
    evaluate->add_option("inputs", eval_inputs, "Text files ('-' or none for stdin); several files add a corpus summary");
    evaluate->add_option("--out", eval_out, "Output JSON (default: stdout)");
    evaluate->callback([&] {
        action = [&] {
            const TermFrequencyEmbedder embedder;
            std::vector<std::pair<std::string, std::string>> texts;
            if (eval_inputs.empty() || (eval_inputs.size() == 1 && eval_inputs[0] == "-")) {
                texts.emplace_back("-", std::string(std::istreambuf_iterator<char>(std::cin), {}));
            } else {
                for (const auto& p : eval_inputs) {
                    texts.emplace_back(p.string(), io::read_text_file(p));
                }
            }
            if (texts.size() == 1) {
                emit(eval_out, text_metrics_json(texts[0].second, embedder).dump(2) + "\n");
                return kExitOk;
            }
            ordered_json out;
            ordered_json per_text = ordered_json::array();
            std::vector<TextMetricsReport> reports;
            for (const auto& [name, text] : texts) {
                ordered_json item = {{"input", name}};
                item.update(text_metrics_json(text, embedder));
                per_text.push_back(std::move(item));
                reports.push_back(evaluate_text(text, embedder));
            }
            const CorpusSummary summary = summarize_corpus(reports);
            auto ms = [](const MeanSd& m) { return ordered_json{{"mean", m.mean}, {"sd", m.sd}}; };
            out["texts"] = std::move(per_text);
            out["corpus"] = {{"n_texts", summary.n_texts}, {"ttr", ms(summary.ttr)}, {"maas", ms(summary.maas)},
                             {"fres", ms(summary.fres)}, {"cohs", ms(summary.cohs)}};
            emit(eval_out, out.dump(2) + "\n");
            return kExitOk;
        };
    });

    // ---- classification ---------------------------------------------------
    auto* classification = app.add_subcommand("classification", "Per-class and macro metrics from a confusion matrix");
    fs::path cls_matrix;
    fs::path cls_out;
    classification->add_option("--matrix", cls_matrix, "CSV: header ',class1,class2,...', then one row per true class")
        ->required();
    classification->add_option("--out", cls_out, "Output JSON (default: stdout)");
    classification->callback([&] {
        action = [&] {
            const auto metrics = classification_metrics(read_confusion_csv(cls_matrix));
            ordered_json out;
            ordered_json per_class = ordered_json::array();
            for (const auto& c : metrics.per_class) {
                per_class.push_back({{"class", c.name}, {"precision", c.precision}, {"recall", c.recall},
                                     {"f1", c.f1}, {"support", c.support}});
            }
            out["per_class"] = std::move(per_class);
            out["macro"] = {{"precision", metrics.macro_precision}, {"recall", metrics.macro_recall},
                            {"f1", metrics.macro_f1}};
            out["accuracy"] = metrics.accuracy;
            out["warnings"] = metrics.warnings;
            for (const auto& w : metrics.warnings) {
                log->warn("{}", w);
            }
            emit(cls_out, out.dump(2) + "\n");
            return kExitOk;
        };
    });

    // ---- pipeline ---------------------------------------------------------
    auto* pipeline = app.add_subcommand("pipeline", "Run every stage and write all artifacts plus a manifest");
    fs::path pl_config;
    fs::path pl_heatmap;
    fs::path pl_gt;
    fs::path pl_volume;
    fs::path pl_labels;
    fs::path pl_out;
    std::size_t pl_slice = 0;
    bool pl_offline = false;
    bool pl_skip_report = false;
    std::string pl_timestamp;
    std::string pl_sample_id;
    fs::path pl_batch;
    unsigned pl_jobs = std::max(1U, std::thread::hardware_concurrency());
    SegmentationFlags pl_seg;
    LlmFlags pl_llm;
    ModelFlags pl_model;
    pipeline->add_option("--config", pl_config, "TOML config file (flags > environment > config > defaults)");
    auto* pl_heatmap_opt = pipeline->add_option("--heatmap", pl_heatmap, "Heatmap (.npy or .png)");
    auto* pl_gt_opt = pipeline->add_option("--gt-mask", pl_gt, "Ground-truth mask (.png or .npy)");
    auto* pl_volume_opt = pipeline->add_option("--atlas-volume", pl_volume, "NIfTI-1 label volume");
    auto* pl_labels_opt = pipeline->add_option("--atlas-labels", pl_labels, "Label table (CSV or XML)");
    auto* pl_slice_opt = pipeline->add_option("--atlas-slice", pl_slice, "Axial slice index (default: mid-slice)");
    auto* pl_out_opt = pipeline->add_option("--out-dir", pl_out, "Output directory");
    auto* pl_offline_opt = pipeline->add_flag("--offline", pl_offline, "Deterministic template report, no network");
    auto* pl_skip_opt = pipeline->add_flag("--skip-report", pl_skip_report, "Stop after the findings document");
    auto* pl_timestamp_opt = pipeline->add_option("--timestamp", pl_timestamp, "created_at value (RFC 3339)");
    pipeline->add_option("--sample-id", pl_sample_id, "Sample identifier (default: heatmap file stem)");
    pipeline->add_option("--batch", pl_batch, "Directory of sample subdirectories to process in parallel");
    pipeline->add_option("--jobs", pl_jobs, "Parallel samples in --batch mode")->check(CLI::PositiveNumber);
    pl_seg.add(pipeline);
    pl_llm.add(pipeline);
    pl_model.add(pipeline);
    pipeline->callback([&] {
        action = [&] {
            PipelineConfig cfg;
            if (!pl_config.empty()) {
                apply_toml_config(cfg, pl_config);
            }
            apply_environment(cfg);
            if (*pl_heatmap_opt) cfg.heatmap = pl_heatmap;
            if (*pl_gt_opt) cfg.gt_mask = pl_gt;
            if (*pl_volume_opt) cfg.atlas_volume = pl_volume;
            if (*pl_labels_opt) cfg.atlas_labels = pl_labels;
            if (*pl_slice_opt) cfg.atlas_slice = pl_slice;
            if (*pl_out_opt) cfg.output_dir = pl_out;
            if (*pl_offline_opt) cfg.offline = pl_offline;
            if (*pl_skip_opt) cfg.skip_report = pl_skip_report;
            if (*pl_timestamp_opt) cfg.timestamp = pl_timestamp;
            cfg.sample_id = pl_sample_id;
            pl_seg.apply(cfg.segmentation);
            pl_llm.apply(cfg.llm);

            const ProgressFn progress = [&](std::string_view sample, std::string_view message) {
                if (message.starts_with("warning: ")) {
                    log->warn("[{}] {}", sample, message.substr(9));
                } else if (message.starts_with("failed")) {
                    log->error("[{}] {}", sample, message);
                } else {
                    log->info("[{}] {}", sample, message);
                }
            };

            if (!pl_batch.empty()) {
                if (*pl_model.pred_opt || !cfg.prediction.empty()) {
                    throw InputError("--pred cannot be combined with --batch; put pred.json in each sample directory");
                }
                pl_model.apply(cfg.sample);
                if (cfg.atlas_volume.empty() || cfg.atlas_labels.empty()) {
                    throw InputError("--atlas-volume and --atlas-labels are required");
                }
                const auto outcomes = run_batch(cfg, pl_batch, pl_jobs, progress);
                int code = kExitOk;
                std::size_t failed = 0;
                for (const auto& o : outcomes) {
                    if (o.error) {
                        ++failed;
                        code = std::max(code, o.error->input_error() ? kExitInput : kExitProcessing);
                        std::cerr << fmt::format("error[{}:{}]: {}: {}\n",
                                                 o.error->input_error() ? "input" : "processing", o.error->stage(),
                                                 o.sample_id, one_line(o.error->what()));
                    }
                }
                log->info("{} of {} samples succeeded", outcomes.size() - failed, outcomes.size());
                return code;
            }

            pl_model.apply(cfg.sample, cfg.prediction);
            for (const auto& [flag, path] : {std::pair{"--heatmap", &cfg.heatmap}, std::pair{"--gt-mask", &cfg.gt_mask},
                                             std::pair{"--atlas-volume", &cfg.atlas_volume},
                                             std::pair{"--atlas-labels", &cfg.atlas_labels}}) {
                if (path->empty()) {
                    throw InputError(fmt::format("{} is required (flag or config file)", flag));
                }
            }
            const PipelineResult result = run_pipeline(cfg, progress);
            log->info("[{}] wrote {} artifacts and {} to {}", result.sample_id, result.artifacts.size(), kManifestFile,
                      cfg.output_dir.string());
            return kExitOk;
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error[input]: " << one_line(e.what()) << " (run with --help for usage)\n";
        return kExitInput;
    }

    log = make_logger(quiet, verbose);
    try {
        return action();
    } catch (const StageError& e) {
        std::cerr << fmt::format("error[{}:{}]: {}\n", e.input_error() ? "input" : "processing", e.stage(),
                                 one_line(e.what()));
        return e.input_error() ? kExitInput : kExitProcessing;
    } catch (const InputError& e) {
        std::cerr << "error[input]: " << one_line(e.what()) << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error[processing]: " << one_line(e.what()) << "\n";
        return kExitProcessing;
    }
}
