#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "mock_llm_server.hpp"
#include "neurolens/findings.hpp"
#include "neurolens/io/imaging.hpp"
#include "test_helpers.hpp"

using namespace neurolens;
using neurolens::testing::data_dir;
using neurolens::testing::MockLlmServer;
using neurolens::testing::quote;
using neurolens::testing::run_cli;
using neurolens::testing::slurp;
using neurolens::testing::TempDir;

namespace {

std::string pipeline_inputs() {
    const auto d = data_dir() / "pipeline";
    return "--heatmap " + quote(d / "heatmap.npy") + " --gt-mask " + quote(d / "gt_mask.png") + " --atlas-volume " +
           quote(d / "atlas.nii.gz") + " --atlas-labels " + quote(d / "atlas_labels.csv") + " --pred " +
           quote(d / "pred.json");
}

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST(Cli, UsageErrorsExitWithTwo) {
    EXPECT_EQ(run_cli("").exit_code, 2);
    EXPECT_EQ(run_cli("frobnicate").exit_code, 2);
    const auto r = run_cli("segment --heatmap x.npy");
    EXPECT_EQ(r.exit_code, 2);
    EXPECT_EQ(r.output.rfind("error[input]:", 0), 0U) << r.output;
    EXPECT_EQ(run_cli("--help").exit_code, 0);
}

TEST(Cli, MissingInputNamesThePath) {
    TempDir tmp;
    const auto r = run_cli("segment --heatmap " + quote(tmp / "nope.npy") + " --gt-mask " +
                           quote(data_dir() / "pipeline" / "gt_mask.png") + " --out-mask " + quote(tmp / "m.png"));
    EXPECT_EQ(r.exit_code, 2);
    EXPECT_NE(r.output.find("nope.npy"), std::string::npos);
    EXPECT_EQ(r.output.rfind("error[input]:", 0), 0U);
    EXPECT_EQ(line_count(r.output), 1U) << r.output;
}

TEST(Cli, SegmentHonoursAlphaRange) {
    TempDir tmp;
    const auto d = data_dir() / "pipeline";
    const auto r = run_cli("-q segment --heatmap " + quote(d / "heatmap.npy") + " --gt-mask " + quote(d / "gt_mask.png") +
                               " --out-mask " + quote(tmp / "m.png") + " --alpha-range 80:90",
                           false);
    ASSERT_EQ(r.exit_code, 0) << r.output;
    const auto j = nlohmann::json::parse(r.output);
    EXPECT_GE(j["alpha_star"].get<int>(), 80);
    EXPECT_LE(j["alpha_star"].get<int>(), 90);
    EXPECT_EQ(io::read_mask(tmp / "m.png").count(), j["foreground_pixels"].get<std::size_t>());
    EXPECT_EQ(run_cli("segment --heatmap " + quote(d / "heatmap.npy") + " --gt-mask " + quote(d / "gt_mask.png") +
                      " --out-mask " + quote(tmp / "m.png") + " --alpha-range 80-90")
                  .exit_code,
              2);
    EXPECT_EQ(run_cli("segment --heatmap " + quote(d / "heatmap.npy") + " --gt-mask " + quote(d / "gt_mask.png") +
                      " --out-mask " + quote(tmp / "m.png") + " --alpha-range 95:80")
                  .exit_code,
              2);
}

TEST(Cli, StageCommandsChainIntoAValidDocument) {
    TempDir tmp;
    const auto d = data_dir() / "pipeline";
    ASSERT_EQ(run_cli("-q segment --heatmap " + quote(d / "heatmap.npy") + " --gt-mask " + quote(d / "gt_mask.png") +
                      " --out-mask " + quote(tmp / "m.png") + " --metrics " + quote(tmp / "seg.json"))
                  .exit_code,
              0);
    const auto rois = run_cli("rois --mask " + quote(tmp / "m.png"), false);
    ASSERT_EQ(rois.exit_code, 0);
    EXPECT_TRUE(nlohmann::json::parse(rois.output).is_object() || nlohmann::json::parse(rois.output).is_array());
    ASSERT_EQ(run_cli("-q map-atlas --mask " + quote(tmp / "m.png") + " --atlas-volume " + quote(d / "atlas.nii.gz") +
                      " --atlas-labels " + quote(d / "atlas_labels.csv") + " --atlas-slice 3 --out " +
                      quote(tmp / "cov.csv"))
                  .exit_code,
              0);
    const auto built = run_cli("findings --coverage " + quote(tmp / "cov.csv") + " --segmentation " +
                                   quote(tmp / "seg.json") + " --source-image-id heatmap --atlas-id atlas --slice-index 3" +
                                   " --pred " + quote(d / "pred.json") + " --timestamp 2024-05-01T12:00:00Z --out " +
                                   quote(tmp / "f.json"));
    ASSERT_EQ(built.exit_code, 0) << built.output;
    const FindingsDocument doc = parse_findings(slurp(tmp / "f.json"));
    EXPECT_EQ(doc.predicted_class, TumorClass::Meningioma);
    EXPECT_EQ(doc.provenance.created_at, "2024-05-01T12:00:00Z");
    EXPECT_EQ(run_cli("findings --coverage " + quote(tmp / "cov.csv")).exit_code, 2);
}

TEST(Cli, PipelineOfflineIsByteStable) {
    TempDir tmp;
    const auto a = run_cli("-q pipeline --offline --atlas-slice 3 " + pipeline_inputs() + " --out-dir " + quote(tmp / "a"));
    const auto b = run_cli("-q pipeline --offline --atlas-slice 3 " + pipeline_inputs() + " --out-dir " + quote(tmp / "b"));
    ASSERT_EQ(a.exit_code, 0) << a.output;
    ASSERT_EQ(b.exit_code, 0) << b.output;
    const std::string manifest = slurp(tmp / "a" / "manifest.json");
    EXPECT_EQ(manifest, slurp(tmp / "b" / "manifest.json"));
    const auto j = nlohmann::json::parse(manifest);
    EXPECT_EQ(j["artifacts"].size(), 6U);
    for (const auto& artifact : j["artifacts"]) {
        const auto name = artifact["name"].get<std::string>();
        EXPECT_EQ(slurp(tmp / "a" / name), slurp(tmp / "b" / name)) << name;
    }
}

TEST(Cli, PipelineFromConfigFile) {
    TempDir tmp;
    const auto r = run_cli("-q pipeline --config " + quote(data_dir() / "pipeline" / "config.toml") + " --out-dir " +
                           quote(tmp / "out"));
    ASSERT_EQ(r.exit_code, 0) << r.output;
    EXPECT_TRUE(std::filesystem::exists(tmp / "out" / "report.txt"));
    // A flag overrides the config file.
    const auto bad = run_cli("pipeline --config " + quote(data_dir() / "pipeline" / "config.toml") +
                             " --atlas-slice 99 --out-dir " + quote(tmp / "bad"));
    EXPECT_EQ(bad.exit_code, 2);
}

TEST(Cli, OutOfRangeSliceIsAnInputError) {
    TempDir tmp;
    const auto r = run_cli("-q pipeline --offline --atlas-slice 99 " + pipeline_inputs() + " --out-dir " +
                           quote(tmp / "out"));
    EXPECT_EQ(r.exit_code, 2);
    EXPECT_NE(r.output.find("--atlas-slice"), std::string::npos);
    EXPECT_EQ(r.output.rfind("error[input:map-atlas]:", 0), 0U) << r.output;
    EXPECT_EQ(line_count(r.output), 1U) << r.output;
}

TEST(Cli, SkipReportNeedsNoEndpoint) {
    TempDir tmp;
    const auto r = neurolens::testing::run_command("env -u LLM_BASE_URL -u LLM_MODEL " + quote(neurolens::testing::cli_path()) +
                                        " -q pipeline --skip-report --atlas-slice 3 " + pipeline_inputs() + " --out-dir " +
                           quote(tmp / "out"));
    ASSERT_EQ(r.exit_code, 0) << r.output;
    const auto j = nlohmann::json::parse(slurp(tmp / "out" / "manifest.json"));
    EXPECT_EQ(j["artifacts"].size(), 4U);
    EXPECT_FALSE(std::filesystem::exists(tmp / "out" / "report.txt"));
}

TEST(Cli, FindingsValidate) {
    const auto ok = run_cli("findings --validate " + quote(data_dir() / "findings" / "valid.json"), false);
    EXPECT_EQ(ok.exit_code, 0);
    EXPECT_EQ(ok.output, "valid\n");
    const auto bad = run_cli("findings --validate " + quote(data_dir() / "findings" / "percentage_120.json"), false);
    EXPECT_EQ(bad.exit_code, 2);
    EXPECT_NE(bad.output.find("/regions/0/percentage"), std::string::npos);
    const auto missing = run_cli("findings --validate " + quote(data_dir() / "findings" / "missing_saliency_method.json"));
    EXPECT_EQ(missing.exit_code, 2);
    EXPECT_NE(missing.output.find("saliency_method"), std::string::npos);
}

TEST(Cli, ReportAgainstMockEndpoint) {
    TempDir tmp;
    MockLlmServer server({MockLlmServer::status(500), MockLlmServer::ok("Generated text about the Insular Cortex.")});
    const auto r = run_cli("-q report --findings " + quote(data_dir() / "findings" / "valid.json") + " --llm-base-url " +
                           server.base_url() + " --llm-model mock --out " + quote(tmp / "r.txt") + " --audit " +
                           quote(tmp / "audit.json"));
    ASSERT_EQ(r.exit_code, 0) << r.output;
    EXPECT_EQ(slurp(tmp / "r.txt"), "Generated text about the Insular Cortex.");
    const auto audit = nlohmann::json::parse(slurp(tmp / "audit.json"));
    EXPECT_EQ(audit["model_id"], "mock");
    EXPECT_GE(audit["retries"].get<int>(), 1);
    EXPECT_TRUE(audit["grounding_violations"].empty());
    EXPECT_EQ(server.paths().back(), "/v1/chat/completions");
}

TEST(Cli, ReportAuthFailureIsAProcessingError) {
    MockLlmServer server({MockLlmServer::status(401)});
    const auto r = run_cli("-q report --findings " + quote(data_dir() / "findings" / "valid.json") + " --llm-base-url " +
                           server.base_url() + " --llm-model mock");
    EXPECT_EQ(r.exit_code, 3);
    EXPECT_EQ(r.output.rfind("error[processing]:", 0), 0U) << r.output;
    EXPECT_EQ(line_count(r.output), 1U);
    EXPECT_EQ(server.request_count(), 1U);
}

TEST(Cli, OfflineReportIsGrounded) {
    TempDir tmp;
    const auto r = run_cli("report --offline --findings " + quote(data_dir() / "findings" / "valid.json") + " --audit " +
                               quote(tmp / "audit.json"),
                           false);
    ASSERT_EQ(r.exit_code, 0);
    EXPECT_NE(r.output.find("Cingulate Gyrus, anterior division"), std::string::npos);
    EXPECT_TRUE(nlohmann::json::parse(slurp(tmp / "audit.json"))["grounding_violations"].empty());
}

TEST(Cli, EvaluateTextAndClassification) {
    TempDir tmp;
    neurolens::testing::spit(tmp / "a.txt", "The tumor is small. It is near the cortex.\n");
    neurolens::testing::spit(tmp / "b.txt", "Large lesion observed. Review advised.\n");
    const auto one = run_cli("evaluate-text " + quote(tmp / "a.txt"), false);
    ASSERT_EQ(one.exit_code, 0);
    EXPECT_TRUE(nlohmann::json::parse(one.output).contains("ttr"));
    const auto two = run_cli("evaluate-text " + quote(tmp / "a.txt") + " " + quote(tmp / "b.txt"), false);
    ASSERT_EQ(two.exit_code, 0);
    EXPECT_EQ(nlohmann::json::parse(two.output)["corpus"]["n_texts"], 2);

    neurolens::testing::spit(tmp / "cm.csv", ",Glioma,Meningioma,Pituitary\nGlioma,113,0,8\nMeningioma,6,158,6\nPituitary,1,2,189\n");
    const auto cls = run_cli("classification --matrix " + quote(tmp / "cm.csv"), false);
    ASSERT_EQ(cls.exit_code, 0) << cls.output;
    EXPECT_DOUBLE_EQ(nlohmann::json::parse(cls.output)["accuracy"].get<double>(), 460.0 / 483.0);
    neurolens::testing::spit(tmp / "bad.csv", ",A,B\nA,1,x\nB,0,1\n");
    EXPECT_EQ(run_cli("classification --matrix " + quote(tmp / "bad.csv")).exit_code, 2);
}

TEST(Cli, BatchMode) {
    TempDir tmp;
    const auto d = data_dir() / "pipeline";
    const auto r = run_cli("-q pipeline --offline --atlas-slice 3 --batch " + quote(d / "batch") + " --jobs 2" +
                           " --atlas-volume " + quote(d / "atlas.nii.gz") + " --atlas-labels " +
                           quote(d / "atlas_labels.csv") + " --out-dir " + quote(tmp / "out"));
    ASSERT_EQ(r.exit_code, 0) << r.output;
    for (const char* s : {"s01", "s02", "s03"}) {
        EXPECT_TRUE(std::filesystem::exists(tmp / "out" / s / "manifest.json")) << s;
    }
}
