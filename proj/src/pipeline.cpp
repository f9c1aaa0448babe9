#include "neurolens/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstring>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "neurolens/atlas.hpp"
#include "neurolens/hash.hpp"
#include "neurolens/io/csv.hpp"
#include "neurolens/io/file.hpp"
#include "neurolens/io/imaging.hpp"
#include "neurolens/io/nifti.hpp"
#include "neurolens/roi.hpp"
#include "neurolens/segmentation.hpp"

namespace neurolens {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

/// Runs `fn`, converting library exceptions into a StageError for `stage`.
template <typename Fn>
auto stage(std::string_view name, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const InputError& e) {
        throw StageError(std::string(name), e.what(), true);
    } catch (const std::exception& e) {
        throw StageError(std::string(name), e.what(), false);
    }
}

fs::path partial_path(const fs::path& dir, std::string_view name) {
    return dir / (std::string(name) + ".partial");
}

nlohmann::ordered_json nullable(const std::function<double()>& fn) {
    try {
        return fn();
    } catch (const InputError&) {
        return nullptr;
    }
}

std::string stem_of(const fs::path& p) {
    std::string name = p.filename().string();
    for (const char* ext : {".gz", ".nii", ".hdr", ".img", ".npy", ".png"}) {
        if (name.size() > std::strlen(ext) && name.ends_with(ext)) {
            name.resize(name.size() - std::strlen(ext));
        }
    }
    return name;
}

}  // namespace

StageError::StageError(std::string stage, const std::string& message, bool input_error)
    : Error(message), stage_(std::move(stage)), input_error_(input_error) {}

nlohmann::ordered_json segmentation_json(const SegmentationResult& r) {
    ordered_json j;
    j["alpha_star"] = r.alpha_star;
    j["threshold_value"] = r.threshold_value;
    j["search_dsc"] = r.search_dsc;
    j["dsc"] = r.dsc;
    j["iou"] = r.iou;
    j["foreground_pixels"] = r.mask.count();
    j["shape"] = {r.mask.height(), r.mask.width()};
    return j;
}

SegmentationResult read_segmentation_json(const fs::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(io::read_text_file(path));
        SegmentationResult r;
        r.alpha_star = j.at("alpha_star").get<int>();
        r.dsc = j.at("dsc").get<double>();
        r.iou = j.at("iou").get<double>();
        r.threshold_value = j.value("threshold_value", 0.0);
        r.search_dsc = j.value("search_dsc", 0.0);
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(fmt::format("'{}' is not a segmentation metrics file: {}", path.string(), e.what()));
    }
}

nlohmann::ordered_json rois_json(const std::vector<RegionDescriptor>& rois, bool with_coords) {
    ordered_json list = ordered_json::array();
    for (std::size_t k = 0; k < rois.size(); ++k) {
        const auto& r = rois[k];
        ordered_json item;
        item["label"] = k + 1;
        item["area"] = r.area;
        item["bbox"] = {{"x_min", r.bbox.x_min}, {"y_min", r.bbox.y_min}, {"x_max", r.bbox.x_max},
                        {"y_max", r.bbox.y_max}};
        if (with_coords) {
            ordered_json coords = ordered_json::array();
            for (const auto& p : r.coords) {
                coords.push_back({p.row, p.col});
            }
            item["coords"] = std::move(coords);
        }
        list.push_back(std::move(item));
    }
    return list;
}

nlohmann::ordered_json text_metrics_json(std::string_view text, const EmbeddingProvider& embedder) {
    const auto tokens = tokenize(text);
    const auto sentences = split_sentences(text);
    std::size_t syllables = 0;
    for (const auto& t : tokens) {
        syllables += static_cast<std::size_t>(count_syllables(t));
    }
    std::vector<std::string> types(tokens);
    std::sort(types.begin(), types.end());
    types.erase(std::unique(types.begin(), types.end()), types.end());

    ordered_json j;
    j["n_tokens"] = tokens.size();
    j["n_types"] = types.size();
    j["n_sentences"] = sentences.size();
    j["n_syllables"] = syllables;
    j["ttr"] = nullable([&] { return ttr(text); });
    j["maas"] = nullable([&] { return maas(text); });
    j["fres"] = nullable([&] { return fres(text); });
    j["cohs"] = nullable([&] { return coherence(text, embedder); });
    return j;
}

PipelineResult run_pipeline(const PipelineConfig& config, const ProgressFn& progress) {
    PipelineResult result;
    result.sample_id = config.sample_id.empty() ? stem_of(config.heatmap) : config.sample_id;
    auto note = [&](std::string_view message) {
        if (progress) {
            progress(result.sample_id, message);
        }
    };
    auto warn = [&](std::string message) {
        note(fmt::format("warning: {}", message));
        result.warnings.push_back(std::move(message));
    };

    const fs::path out = config.output_dir;
    stage("load", [&] {
        config.segmentation.validate();
        if (!config.offline && !config.skip_report) {
            config.llm.validate();
        }
        std::error_code ec;
        fs::create_directories(out, ec);
        if (ec) {
            throw InputError(fmt::format("cannot create output directory '{}': {}", out.string(), ec.message()));
        }
        fs::remove(out / kManifestFile, ec);
    });

    const Heatmap heatmap = stage("load", [&] { return io::read_heatmap(config.heatmap); });
    const BinaryMask reference = stage("load", [&] { return io::read_mask(config.gt_mask); });
    const Atlas atlas = stage("load", [&] { return io::read_atlas(config.atlas_volume, config.atlas_labels); });
    std::vector<std::string> written;
    auto write_artifact = [&](std::string_view name, const std::function<void(const fs::path&)>& writer) {
        writer(partial_path(out, name));
        written.emplace_back(name);
    };

    note("segment");
    result.segmentation = stage("segment", [&] {
        if (heatmap.shape() != reference.shape()) {
            throw ShapeMismatch(fmt::format("heatmap is {} but the ground-truth mask is {}", to_string(heatmap.shape()),
                                            to_string(reference.shape())));
        }
        return segment_heatmap(heatmap, reference, config.segmentation);
    });
    stage("segment", [&] {
        write_artifact(kMaskFile, [&](const fs::path& p) { io::write_mask_png(p, result.segmentation.mask); });
        write_artifact(kOverlayFile,
                       [&](const fs::path& p) { io::write_overlay(p, heatmap, result.segmentation.mask); });
    });

    note("rois");
    const BinaryMask roi_mask = stage("rois", [&] {
        result.rois = extract_rois(result.segmentation.mask);
        BinaryMask m(result.segmentation.mask.shape());
        for (const auto& roi : result.rois) {
            for (const auto& p : roi.coords) {
                m.set(p.row, p.col);
            }
        }
        return m;
    });

    note("map-atlas");
    result.coverage = stage("map-atlas", [&] {
        if (config.atlas_slice) {
            result.atlas_slice = *config.atlas_slice;
            if (result.atlas_slice >= atlas.dims().z) {
                throw InputError(fmt::format("--atlas-slice {} is out of range: the atlas has {} axial slices",
                                             result.atlas_slice, atlas.dims().z));
            }
        } else {
            result.atlas_slice = atlas.dims().z / 2;
            warn(fmt::format("no --atlas-slice given, using the mid-slice {}", result.atlas_slice));
        }
        auto table = map_rois(roi_mask, atlas, result.atlas_slice);
        for (const auto& w : table.warnings) {
            warn(w);
        }
        write_artifact(kCoverageFile, [&](const fs::path& p) { io::write_coverage_csv(p, table); });
        return table;
    });

    note("findings");
    const std::string created_at = stage("findings", [&] { return resolve_timestamp(config.timestamp, config.offline); });
    result.findings = stage("findings", [&] {
        Provenance provenance{result.sample_id, stem_of(config.atlas_volume), result.atlas_slice, created_at};
        auto doc = build_findings(config.sample.model_name, config.sample.predicted_class, config.sample.confidence,
                                  config.sample.saliency_method, result.coverage, result.segmentation,
                                  std::move(provenance));
        const std::string text = serialize_findings(doc);
        if (const auto check = validate_findings(text); !check.ok()) {
            throw ProcessingError(fmt::format("generated findings fail validation at '{}': {}",
                                              check.violations.front().path, check.violations.front().message));
        }
        write_artifact(kFindingsFile, [&](const fs::path& p) { io::write_text_file(p, text); });
        return doc;
    });

    if (!config.skip_report) {
        note("report");
        result.report = stage("report", [&] {
            return config.offline ? generate_stub_report(result.findings, created_at)
                                  : generate_report(result.findings, config.llm, created_at);
        });
        stage("report", [&] {
            write_artifact(kReportFile, [&](const fs::path& p) { io::write_text_file(p, result.report->text); });
        });

        note("evaluate");
        stage("evaluate", [&] {
            result.grounding = ground_check(*result.report, result.findings);
            ordered_json j;
            j["model_id"] = result.report->model_id;
            j["retries"] = result.report->retries;
            j["prompt_sha256"] = result.report->prompt_hash;
            j["findings_sha256"] = result.report->findings_hash;
            j["created_at"] = result.report->created_at;
            j["text_metrics"] = text_metrics_json(result.report->text, TermFrequencyEmbedder{});
            ordered_json violations = ordered_json::array();
            for (const auto& v : result.grounding) {
                violations.push_back({{"kind", to_string(v.kind)}, {"excerpt", v.excerpt}, {"message", v.message}});
            }
            j["grounding_violations"] = std::move(violations);
            write_artifact(kReportMetricsFile, [&](const fs::path& p) { io::write_text_file(p, j.dump(2) + "\n"); });
            for (const auto& v : result.grounding) {
                warn(fmt::format("grounding: {}", v.message));
            }
        });
    }

    note("write");
    stage("write", [&] {
        ordered_json manifest;
        manifest["sample_id"] = result.sample_id;
        manifest["summary"] = {
            {"alpha_star", result.segmentation.alpha_star},
            {"dsc", result.findings.segmentation_metrics.dsc},
            {"iou", result.findings.segmentation_metrics.iou},
            {"n_rois", result.rois.size()},
            {"atlas_slice", result.atlas_slice},
            {"n_regions", result.coverage.rows.size()},
        };
        ordered_json artifacts = ordered_json::array();
        for (const auto& name : written) {
            const fs::path partial = partial_path(out, name);
            ArtifactRecord record{name, sha256_file(partial), fs::file_size(partial)};
            artifacts.push_back({{"name", record.name}, {"sha256", record.sha256}, {"bytes", record.bytes}});
            result.artifacts.push_back(std::move(record));
        }
        manifest["artifacts"] = std::move(artifacts);
        io::write_text_file(partial_path(out, kManifestFile), manifest.dump(2) + "\n");
        for (const auto& name : written) {
            fs::rename(partial_path(out, name), out / name);
        }
        fs::rename(partial_path(out, kManifestFile), out / kManifestFile);
    });
    return result;
}

std::vector<BatchOutcome> run_batch(const PipelineConfig& config, const fs::path& batch_dir, unsigned jobs,
                                    const ProgressFn& progress) {
    if (!fs::is_directory(batch_dir)) {
        throw InputError(fmt::format("batch directory '{}' does not exist", batch_dir.string()));
    }
    std::vector<fs::path> samples;
    for (const auto& entry : fs::directory_iterator(batch_dir)) {
        if (entry.is_directory()) {
            samples.push_back(entry.path());
        }
    }
    std::sort(samples.begin(), samples.end());

    auto first_existing = [](const fs::path& dir, std::initializer_list<std::string> names) -> fs::path {
        for (const auto& n : names) {
            if (fs::exists(dir / n)) {
                return dir / n;
            }
        }
        return {};
    };

    std::vector<BatchOutcome> outcomes(samples.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < samples.size(); i = next++) {
            const fs::path& dir = samples[i];
            BatchOutcome& outcome = outcomes[i];
            outcome.sample_id = dir.filename().string();
            try {
                PipelineConfig sample = config;
                sample.sample_id = outcome.sample_id;
                sample.output_dir = config.output_dir / outcome.sample_id;
                const std::string method(to_string(config.sample.saliency_method));
                sample.heatmap = first_existing(dir, {"heatmap_" + method + ".npy", "heatmap.npy", "heatmap.png"});
                sample.gt_mask = first_existing(dir, {"gt_mask.png", "gt_mask.npy"});
                if (sample.heatmap.empty() || sample.gt_mask.empty()) {
                    throw StageError("load", fmt::format("'{}' lacks a heatmap or gt_mask file", dir.string()), true);
                }
                if (const auto pred = dir / "pred.json"; fs::exists(pred)) {
                    sample.sample = stage("load", [&] { return read_prediction_json(pred, config.sample.saliency_method); });
                }
                outcome.result = run_pipeline(sample, progress);
            } catch (const StageError& e) {
                outcome.error = e;
                if (progress) {
                    progress(outcome.sample_id, fmt::format("failed in {}: {}", e.stage(), e.what()));
                }
            }
        }
    };
    const unsigned n = std::max(1U, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(samples.size(), 1))));
    std::vector<std::jthread> threads;
    for (unsigned t = 0; t < n; ++t) {
        threads.emplace_back(worker);
    }
    threads.clear();
    return outcomes;
}

}  // namespace neurolens
