#include <gtest/gtest.h>

#include "mock_llm_server.hpp"
#include "neurolens/hash.hpp"
#include "neurolens/report.hpp"
#include "test_helpers.hpp"

using namespace neurolens;
using neurolens::testing::MockLlmServer;

namespace {

LlmEndpointConfig config_for(const MockLlmServer& server, int max_retries = 3) {
    LlmEndpointConfig cfg;
    cfg.base_url = server.base_url();
    cfg.model_id = "mock-model";
    cfg.api_key = "sk-test";
    cfg.timeout_seconds = 5;
    cfg.max_retries = max_retries;
    cfg.backoff_base = std::chrono::milliseconds(1);
    return cfg;
}

}  // namespace

TEST(ChatCompletion, RetriesTransientFailuresThenSucceeds) {
    MockLlmServer server({MockLlmServer::status(503), MockLlmServer::status(503), MockLlmServer::ok("fine")});
    int retries = -1;
    EXPECT_EQ(chat_completion(config_for(server), "sys", "user", &retries), "fine");
    EXPECT_EQ(retries, 2);
    EXPECT_EQ(server.request_count(), 3U);
}

TEST(ChatCompletion, RateLimitAndTimeoutStatusesAreRetried) {
    MockLlmServer server({MockLlmServer::status(429), MockLlmServer::status(408), MockLlmServer::ok("ok")});
    int retries = 0;
    EXPECT_EQ(chat_completion(config_for(server), "s", "u", &retries), "ok");
    EXPECT_EQ(retries, 2);
}

TEST(ChatCompletion, UnauthorisedFailsAtOnce) {
    MockLlmServer server({MockLlmServer::status(401), MockLlmServer::ok("never")});
    EXPECT_THROW(chat_completion(config_for(server), "s", "u"), AuthError);
    EXPECT_EQ(server.request_count(), 1U);
    MockLlmServer forbidden({MockLlmServer::status(403)});
    EXPECT_THROW(chat_completion(config_for(forbidden), "s", "u"), AuthError);
}

TEST(ChatCompletion, ClientErrorIsNotRetried) {
    MockLlmServer server({MockLlmServer::status(400), MockLlmServer::ok("never")});
    try {
        chat_completion(config_for(server), "s", "u");
        FAIL() << "expected LlmError";
    } catch (const AuthError&) {
        FAIL() << "400 is not an authentication failure";
    } catch (const LlmError& e) {
        EXPECT_NE(std::string(e.what()).find("400"), std::string::npos);
    }
    EXPECT_EQ(server.request_count(), 1U);
}

TEST(ChatCompletion, ExhaustedRetriesRaiseLlmError) {
    MockLlmServer server({MockLlmServer::status(500)});
    try {
        chat_completion(config_for(server, 2), "s", "u");
        FAIL() << "expected LlmError";
    } catch (const LlmError& e) {
        EXPECT_NE(std::string(e.what()).find("after 2 retries"), std::string::npos);
    }
    EXPECT_EQ(server.request_count(), 3U);
}

TEST(ChatCompletion, UnusableBodiesRaiseLlmError) {
    MockLlmServer empty({MockLlmServer::ok("   \n")});
    EXPECT_THROW(chat_completion(config_for(empty), "s", "u"), LlmError);
    MockLlmServer not_json({{200, "<html>"}});
    EXPECT_THROW(chat_completion(config_for(not_json), "s", "u"), LlmError);
    MockLlmServer no_choices({{200, R"({"choices": []})"}});
    EXPECT_THROW(chat_completion(config_for(no_choices), "s", "u"), LlmError);
    EXPECT_EQ(no_choices.request_count(), 1U);
}

TEST(ChatCompletion, ConnectionRefusedIsRetriedThenFails) {
    LlmEndpointConfig cfg;
    {
        MockLlmServer gone({MockLlmServer::ok("x")});
        cfg = config_for(gone, 1);
    }
    cfg.timeout_seconds = 1;
    EXPECT_THROW(chat_completion(cfg, "s", "u"), LlmError);
}

TEST(ChatCompletion, SendsOpenAiShapedRequest) {
    MockLlmServer server({MockLlmServer::ok("report")});
    LlmEndpointConfig cfg = config_for(server);
    cfg.temperature = 0.0;
    chat_completion(cfg, "system text", "user text");
    ASSERT_EQ(server.request_count(), 1U);
    EXPECT_EQ(server.paths()[0], "/v1/chat/completions");
    EXPECT_EQ(server.authorization_headers()[0], "Bearer sk-test");
    const auto body = server.request_bodies()[0];
    EXPECT_EQ(body["model"], "mock-model");
    EXPECT_EQ(body["temperature"], 0.0);
    ASSERT_EQ(body["messages"].size(), 2U);
    EXPECT_EQ(body["messages"][0]["role"], "system");
    EXPECT_EQ(body["messages"][0]["content"], "system text");
    EXPECT_EQ(body["messages"][1]["role"], "user");
    EXPECT_EQ(body["messages"][1]["content"], "user text");

    MockLlmServer anonymous({MockLlmServer::ok("r")});
    LlmEndpointConfig no_key = config_for(anonymous);
    no_key.api_key.clear();
    chat_completion(no_key, "s", "u");
    EXPECT_EQ(anonymous.authorization_headers()[0], "");
}

TEST(GenerateReport, RecordsHashesAndModel) {
    const FindingsDocument d =
        parse_findings(neurolens::testing::slurp(neurolens::testing::data_dir() / "findings" / "valid.json"));
    MockLlmServer server({MockLlmServer::status(502), MockLlmServer::ok("Model Performance Summary\n...")});
    const GeneratedReport r = generate_report(d, config_for(server), "2024-05-01T12:00:00Z");
    EXPECT_EQ(r.text, "Model Performance Summary\n...");
    EXPECT_EQ(r.model_id, "mock-model");
    EXPECT_EQ(r.retries, 1);
    EXPECT_EQ(r.prompt_hash, sha256_hex(build_prompt(d)));
    EXPECT_EQ(r.findings_hash, sha256_hex(serialize_findings(d)));
    EXPECT_EQ(r.created_at, "2024-05-01T12:00:00Z");
    EXPECT_EQ(server.request_bodies().back()["messages"][1]["content"], build_prompt(d));
    EXPECT_EQ(server.request_bodies().back()["messages"][0]["content"], system_message());
}
