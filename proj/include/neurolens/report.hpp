#pragma once

#include <chrono>
#include <string>
#include <string_view>
#include <vector>

#include "neurolens/findings.hpp"

namespace neurolens {

/// Non-retryable rejection of the credentials (HTTP 401/403).
class AuthError : public ProcessingError {
public:
    using ProcessingError::ProcessingError;
};

/// Endpoint failure: exhausted retries, a non-retryable status, or an unusable body.
class LlmError : public ProcessingError {
public:
    using ProcessingError::ProcessingError;
};

/// OpenAI-compatible chat-completions endpoint.
struct LlmEndpointConfig {
    std::string base_url;   ///< e.g. "https://host/v1"; "/v1/chat/completions" is appended as needed
    std::string model_id;
    std::string api_key;    ///< sent as a bearer token when non-empty
    double timeout_seconds = 60;
    int max_retries = 3;
    double temperature = 0.2;
    std::chrono::milliseconds backoff_base{500};  ///< delay before retry k is backoff_base * 2^k

    /// Throws InputError on a missing URL/model, timeout <= 0 or max_retries < 0.
    void validate() const;
};

struct GeneratedReport {
    std::string text;
    std::string model_id;
    std::string prompt_hash;    ///< SHA-256 of build_prompt(findings)
    std::string findings_hash;  ///< SHA-256 of serialize_findings(findings)
    std::string created_at;
    int retries = 0;
};

/// Fixed system message sent with every request.
std::string_view system_message();

/// Deterministic user prompt: role framing, the findings JSON verbatim, the
/// required report sections, and the instruction to rely on the JSON only.
std::string build_prompt(const FindingsDocument& findings);

/// Name of the stub "model" recorded in offline reports.
inline constexpr std::string_view kStubModelId = "offline-stub";

/// Fixed template that states every region and metric from the document and nothing else.
std::string stub_report_text(const FindingsDocument& findings);

GeneratedReport generate_stub_report(const FindingsDocument& findings, std::string created_at);

/// Full URL of the chat-completions route for `base_url`.
std::string chat_completions_url(std::string_view base_url);

/**
 * Sends one chat completion request and returns the assistant message.
 *
 * Connection failures, timeouts, 408, 429 and 5xx responses are retried up to
 * cfg.max_retries times with exponential backoff. 401/403 raise AuthError at
 * once; other statuses, malformed bodies and empty completions raise LlmError.
 * `retries` receives the number of retries performed.
 */
std::string chat_completion(const LlmEndpointConfig& cfg, std::string_view system, std::string_view user,
                            int* retries = nullptr);

GeneratedReport generate_report(const FindingsDocument& findings, const LlmEndpointConfig& cfg,
                                std::string created_at);

// ---------------------------------------------------------------------------
// Grounding check
// ---------------------------------------------------------------------------

/// Region names the grounding check looks for in report text.
class RegionLexicon {
public:
    /// One name per line; blank lines and lines starting with '#' are skipped.
    static RegionLexicon from_text(std::string_view text);
    /// The lexicon shipped with the library.
    static const RegionLexicon& builtin();

    /// Lower-cased names, longest first.
    [[nodiscard]] const std::vector<std::string>& terms() const noexcept { return terms_; }

private:
    std::vector<std::string> terms_;
};

enum class ViolationKind { UnknownRegion, UngroundedNumber, ClassContradiction };

std::string_view to_string(ViolationKind kind);

struct GroundingViolation {
    ViolationKind kind;
    std::string excerpt;   ///< the offending text as written in the report
    std::string message;
};

/**
 * Heuristic, advisory check of a report against its findings document:
 *  - lexicon region names that are not part of any document region name;
 *  - percentages (a number followed by '%' or "percent") farther than 0.05
 *    from every document value (region shares, dsc and iou as percentages,
 *    confidence as a percentage, alpha_star);
 *  - mentions of a tumor class other than the predicted one.
 */
std::vector<GroundingViolation> ground_check(std::string_view report_text, const FindingsDocument& findings,
                                             const RegionLexicon& lexicon = RegionLexicon::builtin());

inline std::vector<GroundingViolation> ground_check(const GeneratedReport& report, const FindingsDocument& findings,
                                                    const RegionLexicon& lexicon = RegionLexicon::builtin()) {
    return ground_check(report.text, findings, lexicon);
}

}  // namespace neurolens
