#include "neurolens/config.hpp"

#include <chrono>
#include <ctime>
#include <limits>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <toml.hpp>

#include "neurolens/io/file.hpp"

namespace neurolens {

namespace {

template <typename T>
std::optional<T> get(const toml::table& root, std::string_view section, std::string_view key) {
    const auto node = root[section][key];
    if (!node) {
        return std::nullopt;
    }
    if (auto v = node.value<T>()) {
        return v;
    }
    throw InputError(fmt::format("config key {}.{} has the wrong type", section, key));
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
    const std::filesystem::path p(value);
    return p.is_absolute() ? p : base / p;
}

int as_int(std::int64_t v, std::string_view key) {
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
        throw InputError(fmt::format("config key {} is out of range", key));
    }
    return static_cast<int>(v);
}

}  // namespace

SampleMetadata read_prediction_json(const std::filesystem::path& path, SaliencyMethod method) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(io::read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(fmt::format("'{}' is not valid JSON: {}", path.string(), e.what()));
    }
    SampleMetadata meta;
    meta.saliency_method = method;
    try {
        meta.model_name = doc.at("model_name").get<std::string>();
        meta.predicted_class = parse_tumor_class(doc.at("predicted_class").get<std::string>());
        if (doc.contains("confidence") && !doc["confidence"].is_null()) {
            meta.confidence = doc["confidence"].get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(fmt::format("'{}': {}", path.string(), e.what()));
    }
    if (meta.confidence && !(*meta.confidence >= 0.0 && *meta.confidence <= 1.0)) {
        throw FormatError(fmt::format("'{}': confidence {} is outside [0,1]", path.string(), *meta.confidence));
    }
    return meta;
}

void apply_toml_config(PipelineConfig& config, const std::filesystem::path& path) {
    toml::table root;
    try {
        root = toml::parse(io::read_text_file(path), path.string());
    } catch (const toml::parse_error& e) {
        throw InputError(fmt::format("'{}': {} (line {})", path.string(), e.description(), e.source().begin.line));
    }
    const auto base = path.parent_path();

    if (auto v = get<std::string>(root, "inputs", "heatmap")) config.heatmap = resolve(base, *v);
    if (auto v = get<std::string>(root, "inputs", "gt_mask")) config.gt_mask = resolve(base, *v);
    if (auto v = get<std::string>(root, "inputs", "pred")) config.prediction = resolve(base, *v);
    if (auto v = get<std::string>(root, "atlas", "volume")) config.atlas_volume = resolve(base, *v);
    if (auto v = get<std::string>(root, "atlas", "labels")) config.atlas_labels = resolve(base, *v);
    if (auto v = get<std::int64_t>(root, "atlas", "slice")) {
        if (*v < 0) {
            throw InputError("config key atlas.slice must be >= 0");
        }
        config.atlas_slice = static_cast<std::size_t>(*v);
    }

    auto& seg = config.segmentation;
    if (auto v = get<std::int64_t>(root, "segmentation", "alpha_low")) seg.alpha_low = as_int(*v, "alpha_low");
    if (auto v = get<std::int64_t>(root, "segmentation", "alpha_high")) seg.alpha_high = as_int(*v, "alpha_high");
    if (auto v = get<std::int64_t>(root, "segmentation", "min_area")) seg.min_area = as_int(*v, "min_area");
    if (auto v = get<std::int64_t>(root, "segmentation", "closing_radius")) {
        seg.closing_radius = as_int(*v, "closing_radius");
    }
    if (auto v = get<double>(root, "segmentation", "epsilon")) seg.epsilon = *v;
    if (auto v = get<std::string>(root, "segmentation", "tie_break")) {
        if (*v == "lowest") {
            seg.tie_break = TieBreak::LowestAlpha;
        } else if (*v == "highest") {
            seg.tie_break = TieBreak::HighestAlpha;
        } else {
            throw InputError(fmt::format("segmentation.tie_break must be 'lowest' or 'highest', got '{}'", *v));
        }
    }

    if (auto v = get<std::string>(root, "model", "name")) config.sample.model_name = *v;
    if (auto v = get<std::string>(root, "model", "predicted_class")) config.sample.predicted_class = parse_tumor_class(*v);
    if (auto v = get<double>(root, "model", "confidence")) config.sample.confidence = *v;
    if (auto v = get<std::string>(root, "model", "saliency_method")) {
        config.sample.saliency_method = parse_saliency_method(*v);
    }

    if (auto v = get<std::string>(root, "llm", "base_url")) config.llm.base_url = *v;
    if (auto v = get<std::string>(root, "llm", "model")) config.llm.model_id = *v;
    if (auto v = get<double>(root, "llm", "timeout")) config.llm.timeout_seconds = *v;
    if (auto v = get<std::int64_t>(root, "llm", "max_retries")) config.llm.max_retries = as_int(*v, "max_retries");
    if (auto v = get<double>(root, "llm", "temperature")) config.llm.temperature = *v;
    if (auto v = get<bool>(root, "llm", "offline")) config.offline = *v;

    if (auto v = get<std::string>(root, "output", "dir")) config.output_dir = resolve(base, *v);
    if (auto v = get<bool>(root, "output", "skip_report")) config.skip_report = *v;
}

void apply_environment(PipelineConfig& config, const EnvLookup& getenv) {
    auto value = [&](const char* name) -> std::optional<std::string> {
        const char* v = getenv(name);
        if (v == nullptr || *v == '\0') {
            return std::nullopt;
        }
        return std::string(v);
    };
    if (auto v = value("LLM_BASE_URL")) config.llm.base_url = *v;
    if (auto v = value("LLM_MODEL")) config.llm.model_id = *v;
    if (auto v = value("LLM_API_KEY")) config.llm.api_key = *v;
    try {
        if (auto v = value("LLM_TIMEOUT")) config.llm.timeout_seconds = std::stod(*v);
        if (auto v = value("LLM_MAX_RETRIES")) config.llm.max_retries = std::stoi(*v);
    } catch (const std::exception&) {
        throw InputError("LLM_TIMEOUT / LLM_MAX_RETRIES must be numeric");
    }
}

std::string format_utc(long long seconds_since_epoch) {
    const auto t = static_cast<std::time_t>(seconds_since_epoch);
    std::tm tm{};
    if (gmtime_r(&t, &tm) == nullptr) {
        throw InputError(fmt::format("timestamp {} is out of range", seconds_since_epoch));
    }
    return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}Z", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                       tm.tm_hour, tm.tm_min, tm.tm_sec);
}

std::string resolve_timestamp(const std::optional<std::string>& explicit_timestamp, bool offline,
                              const EnvLookup& getenv) {
    if (explicit_timestamp) {
        return *explicit_timestamp;
    }
    if (const char* epoch = getenv("SOURCE_DATE_EPOCH"); epoch != nullptr && *epoch != '\0') {
        try {
            std::size_t used = 0;
            const long long seconds = std::stoll(epoch, &used);
            if (used == std::string_view(epoch).size()) {
                return format_utc(seconds);
            }
        } catch (const std::exception&) {
        }
        throw InputError(fmt::format("SOURCE_DATE_EPOCH '{}' is not an integer", epoch));
    }
    if (offline) {
        return format_utc(0);
    }
    const auto now = std::chrono::system_clock::now();
    return format_utc(std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count());
}

}  // namespace neurolens
