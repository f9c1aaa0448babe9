#include <gtest/gtest.h>

#include <map>

#include "neurolens/config.hpp"
#include "test_helpers.hpp"

using namespace neurolens;
using neurolens::testing::data_dir;
using neurolens::testing::spit;
using neurolens::testing::TempDir;

namespace {

EnvLookup env(std::map<std::string, std::string> values) {
    auto shared = std::make_shared<std::map<std::string, std::string>>(std::move(values));
    return [shared](const char* name) -> const char* {
        const auto it = shared->find(name);
        return it == shared->end() ? nullptr : it->second.c_str();
    };
}

}  // namespace

TEST(TomlConfig, FixtureResolvesPathsAgainstItsDirectory) {
    PipelineConfig cfg;
    apply_toml_config(cfg, data_dir() / "pipeline" / "config.toml");
    EXPECT_EQ(cfg.heatmap, data_dir() / "pipeline" / "heatmap.npy");
    EXPECT_EQ(cfg.gt_mask, data_dir() / "pipeline" / "gt_mask.png");
    EXPECT_EQ(cfg.prediction, data_dir() / "pipeline" / "pred.json");
    EXPECT_EQ(cfg.atlas_volume, data_dir() / "pipeline" / "atlas.nii.gz");
    EXPECT_EQ(cfg.atlas_slice, std::optional<std::size_t>(3));
    EXPECT_EQ(cfg.sample.saliency_method, SaliencyMethod::GradCAMpp);
    EXPECT_TRUE(cfg.offline);
    EXPECT_FALSE(cfg.skip_report);
}

TEST(TomlConfig, EveryKey) {
    TempDir tmp;
    spit(tmp / "c.toml", R"(
[inputs]
heatmap = "/abs/h.npy"
[segmentation]
alpha_low = 75
alpha_high = 90
min_area = 10
closing_radius = 2
epsilon = 0.001
tie_break = "highest"
[model]
name = "ResNet50"
predicted_class = "pituitary"
confidence = 0.5
saliency_method = "ScoreCAM"
[llm]
base_url = "http://localhost:8000/v1"
model = "llama"
timeout = 30
max_retries = 5
temperature = 0.0
[output]
dir = "out"
skip_report = true
)");
    PipelineConfig cfg;
    apply_toml_config(cfg, tmp / "c.toml");
    EXPECT_EQ(cfg.heatmap, std::filesystem::path("/abs/h.npy"));
    EXPECT_EQ(cfg.segmentation.alpha_low, 75);
    EXPECT_EQ(cfg.segmentation.alpha_high, 90);
    EXPECT_EQ(cfg.segmentation.min_area, 10);
    EXPECT_EQ(cfg.segmentation.closing_radius, 2);
    EXPECT_EQ(cfg.segmentation.epsilon, 0.001);
    EXPECT_EQ(cfg.segmentation.tie_break, TieBreak::HighestAlpha);
    EXPECT_EQ(cfg.sample.model_name, "ResNet50");
    EXPECT_EQ(cfg.sample.predicted_class, TumorClass::PituitaryTumor);
    EXPECT_EQ(cfg.sample.confidence, std::optional<double>(0.5));
    EXPECT_EQ(cfg.sample.saliency_method, SaliencyMethod::ScoreCAM);
    EXPECT_EQ(cfg.llm.base_url, "http://localhost:8000/v1");
    EXPECT_EQ(cfg.llm.model_id, "llama");
    EXPECT_EQ(cfg.llm.timeout_seconds, 30.0);
    EXPECT_EQ(cfg.llm.max_retries, 5);
    EXPECT_EQ(cfg.llm.temperature, 0.0);
    EXPECT_EQ(cfg.output_dir, tmp / "out");
    EXPECT_TRUE(cfg.skip_report);
}

TEST(TomlConfig, RejectsBadFiles) {
    TempDir tmp;
    PipelineConfig cfg;
    spit(tmp / "syntax.toml", "[inputs\nheatmap = 1\n");
    EXPECT_THROW(apply_toml_config(cfg, tmp / "syntax.toml"), InputError);
    spit(tmp / "type.toml", "[segmentation]\nalpha_low = \"seventy\"\n");
    EXPECT_THROW(apply_toml_config(cfg, tmp / "type.toml"), InputError);
    spit(tmp / "tie.toml", "[segmentation]\ntie_break = \"middle\"\n");
    EXPECT_THROW(apply_toml_config(cfg, tmp / "tie.toml"), InputError);
    spit(tmp / "slice.toml", "[atlas]\nslice = -1\n");
    EXPECT_THROW(apply_toml_config(cfg, tmp / "slice.toml"), InputError);
    EXPECT_THROW(apply_toml_config(cfg, tmp / "absent.toml"), InputError);
}

TEST(Environment, OverridesLlmSettings) {
    PipelineConfig cfg;
    cfg.llm.base_url = "http://from-file/v1";
    cfg.llm.model_id = "file-model";
    apply_environment(cfg, env({{"LLM_BASE_URL", "http://from-env/v1"},
                                {"LLM_API_KEY", "secret"},
                                {"LLM_TIMEOUT", "12.5"},
                                {"LLM_MAX_RETRIES", "7"},
                                {"LLM_MODEL", ""}}));
    EXPECT_EQ(cfg.llm.base_url, "http://from-env/v1");
    EXPECT_EQ(cfg.llm.model_id, "file-model");  // empty variables are ignored
    EXPECT_EQ(cfg.llm.api_key, "secret");
    EXPECT_EQ(cfg.llm.timeout_seconds, 12.5);
    EXPECT_EQ(cfg.llm.max_retries, 7);
    EXPECT_THROW(apply_environment(cfg, env({{"LLM_TIMEOUT", "soon"}})), InputError);
}

TEST(Timestamp, Precedence) {
    EXPECT_EQ(resolve_timestamp(std::string("2024-05-01T12:00:00Z"), true, env({{"SOURCE_DATE_EPOCH", "5"}})),
              "2024-05-01T12:00:00Z");
    EXPECT_EQ(resolve_timestamp(std::nullopt, false, env({{"SOURCE_DATE_EPOCH", "1714564800"}})),
              "2024-05-01T12:00:00Z");
    EXPECT_EQ(resolve_timestamp(std::nullopt, true, env({})), "1970-01-01T00:00:00Z");
    EXPECT_THROW(resolve_timestamp(std::nullopt, true, env({{"SOURCE_DATE_EPOCH", "12abc"}})), InputError);
    const std::string now = resolve_timestamp(std::nullopt, false, env({}));
    EXPECT_EQ(now.size(), 20U);
    EXPECT_GE(now, "2024-01-01T00:00:00Z");
}

TEST(Timestamp, FormatUtc) {
    EXPECT_EQ(format_utc(0), "1970-01-01T00:00:00Z");
    EXPECT_EQ(format_utc(951782400), "2000-02-29T00:00:00Z");
    EXPECT_EQ(format_utc(1714564800), "2024-05-01T12:00:00Z");
}

TEST(PredictionJson, ReadsFixtureAndRejectsBadFiles) {
    const SampleMetadata m = read_prediction_json(data_dir() / "pipeline" / "pred.json", SaliencyMethod::ScoreCAM);
    EXPECT_EQ(m.model_name, "InceptionResNetV2");
    EXPECT_EQ(m.predicted_class, TumorClass::Meningioma);
    EXPECT_EQ(m.confidence, std::optional<double>(0.9731));
    EXPECT_EQ(m.saliency_method, SaliencyMethod::ScoreCAM);

    TempDir tmp;
    spit(tmp / "nulls.json", R"({"model_name": "m", "predicted_class": "glioma", "confidence": null})");
    EXPECT_FALSE(read_prediction_json(tmp / "nulls.json").confidence.has_value());
    spit(tmp / "bad.json", "{");
    EXPECT_THROW(read_prediction_json(tmp / "bad.json"), FormatError);
    spit(tmp / "missing.json", R"({"model_name": "m"})");
    EXPECT_THROW(read_prediction_json(tmp / "missing.json"), FormatError);
    spit(tmp / "range.json", R"({"model_name": "m", "predicted_class": "glioma", "confidence": 1.5})");
    EXPECT_THROW(read_prediction_json(tmp / "range.json"), FormatError);
    spit(tmp / "class.json", R"({"model_name": "m", "predicted_class": "lymphoma"})");
    EXPECT_THROW(read_prediction_json(tmp / "class.json"), InputError);
}
