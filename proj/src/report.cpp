#include "neurolens/report.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <regex>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "neurolens/hash.hpp"
#include "neurolens/resources.hpp"

namespace neurolens {

namespace {

using nlohmann::json;

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

std::string class_display(TumorClass c) {
    switch (c) {
        case TumorClass::Glioma: return "glioma";
        case TumorClass::Meningioma: return "meningioma";
        case TumorClass::PituitaryTumor: return "pituitary tumor";
    }
    return {};
}

std::string method_display(SaliencyMethod m) {
    switch (m) {
        case SaliencyMethod::GradCAM: return "Grad-CAM";
        case SaliencyMethod::GradCAMpp: return "Grad-CAM++";
        case SaliencyMethod::ScoreCAM: return "ScoreCAM";
    }
    return {};
}

struct Endpoint {
    std::string scheme_host_port;
    std::string path;
};

Endpoint split_url(std::string_view url) {
    static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)", std::regex::icase);
    const std::string s(url);
    std::smatch m;
    if (!std::regex_match(s, m, re)) {
        throw InputError(fmt::format("LLM base URL '{}' is not an http(s) URL", url));
    }
    return {m[1].str(), m[2].matched ? m[2].str() : std::string{}};
}

bool retryable_status(int status) {
    return status == 408 || status == 429 || status >= 500;
}

}  // namespace

void LlmEndpointConfig::validate() const {
    if (base_url.empty()) {
        throw InputError("no LLM endpoint configured: set --llm-base-url or LLM_BASE_URL, or run with --offline");
    }
    split_url(base_url);
    if (model_id.empty()) {
        throw InputError("no LLM model configured: set --llm-model or LLM_MODEL");
    }
    if (!(timeout_seconds > 0)) {
        throw InputError(fmt::format("LLM timeout must be positive, got {}", timeout_seconds));
    }
    if (max_retries < 0) {
        throw InputError(fmt::format("LLM max_retries must be >= 0, got {}", max_retries));
    }
}

std::string_view system_message() {
    return "You are a neuroradiology reporting assistant. You write structured, factual reports for "
           "clinicians and never state anything that is not supported by the findings you are given.";
}

std::string build_prompt(const FindingsDocument& findings) {
    std::string p;
    p += "Role: you are assisting a radiologist by explaining the output of an automated brain tumor "
         "classification and saliency analysis of a single MRI slice.\n\n";
    p += "Findings (JSON):\n";
    p += serialize_findings(findings);
    p += "\n";
    p += "Write a medical report with exactly these sections, in this order:\n";
    p += "1. Model Performance Summary: the classification model, the predicted class, the saliency method, "
         "and the segmentation quality (dsc, iou, alpha_star).\n";
    p += "2. Detailed Regional Impact: every region listed in the findings with its percentage overlap, "
         "largest first, and the typical function of that region.\n";
    p += "3. Recommendation: next clinical steps appropriate to the predicted class.\n";
    p += "4. References: the source image, atlas and slice from the provenance block.\n\n";
    if (findings.regions.empty()) {
        p += fmt::format("Note: {}. State that no atlas region is involved and do not name any region.\n\n",
                         findings.note.value_or(std::string(kNoOverlapNote)));
    }
    p += "Use ONLY the facts in the JSON above. Do not mention any brain region, percentage, metric or tumor "
         "class that does not appear in it. Quote region names and percentages exactly as written.\n";
    return p;
}

std::string stub_report_text(const FindingsDocument& f) {
    std::string r;
    r += "Model Performance Summary\n\n";
    r += fmt::format("The classification model {} predicted the tumor class {}", f.model_name,
                     class_display(f.predicted_class));
    if (f.prediction_confidence) {
        r += fmt::format(" with a confidence of {:.4f}", *f.prediction_confidence);
    }
    r += fmt::format(". The supporting saliency map was computed with {}. ", method_display(f.saliency_method));
    const auto& m = f.segmentation_metrics;
    r += fmt::format(
        "Adaptive percentile thresholding selected the cut-off alpha = {:.2f}, and the resulting mask reached a "
        "Dice similarity coefficient of {:.6f} and an intersection over union of {:.6f} against the reference "
        "mask.\n\n",
        m.alpha_star, m.dsc, m.iou);

    r += "Detailed Regional Impact\n\n";
    if (f.regions.empty()) {
        r += fmt::format("The segmented tumor shows {} at atlas slice {}.\n\n",
                         f.note.value_or(std::string(kNoOverlapNote)), f.provenance.slice_index);
    } else {
        r += fmt::format("The segmented tumor overlaps {} atlas {}, listed by share of tumor pixels.\n",
                         f.regions.size(), f.regions.size() == 1 ? "region" : "regions");
        for (const auto& region : f.regions) {
            r += fmt::format("- {} ({:.2f}% overlap, {} pixels).\n", region.name, region.percentage,
                             region.voxel_count);
        }
        r += "\n";
    }

    r += "Recommendation\n\n";
    r += "These findings were produced automatically from a saliency-derived segmentation and an atlas lookup. "
         "They should be reviewed by a qualified radiologist together with the full imaging study before any "
         "clinical decision is made.\n\n";

    r += "References\n\n";
    r += fmt::format("Source image: {}. Atlas: {}, axial slice {}. Findings created at {}.\n",
                     f.provenance.source_image_id, f.provenance.atlas_id, f.provenance.slice_index,
                     f.provenance.created_at);
    return r;
}

GeneratedReport generate_stub_report(const FindingsDocument& findings, std::string created_at) {
    GeneratedReport report;
    report.text = stub_report_text(findings);
    report.model_id = std::string(kStubModelId);
    report.prompt_hash = sha256_hex(build_prompt(findings));
    report.findings_hash = sha256_hex(serialize_findings(findings));
    report.created_at = std::move(created_at);
    return report;
}

std::string chat_completions_url(std::string_view base_url) {
    std::string url(base_url);
    while (!url.empty() && url.back() == '/') {
        url.pop_back();
    }
    if (url.ends_with("/chat/completions")) {
        return url;
    }
    if (url.ends_with("/v1")) {
        return url + "/chat/completions";
    }
    return url + "/v1/chat/completions";
}

std::string chat_completion(const LlmEndpointConfig& cfg, std::string_view system, std::string_view user,
                            int* retries) {
    cfg.validate();
    const Endpoint endpoint = split_url(chat_completions_url(cfg.base_url));

    const json request = {
        {"model", cfg.model_id},
        {"temperature", cfg.temperature},
        {"messages", json::array({{{"role", "system"}, {"content", system}}, {{"role", "user"}, {"content", user}}})},
    };
    const std::string body = request.dump();
    httplib::Headers headers;
    if (!cfg.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + cfg.api_key);
    }

    const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::duration<double>(cfg.timeout_seconds));
    std::string last_failure;
    for (int attempt = 0;; ++attempt) {
        if (retries != nullptr) {
            *retries = attempt;
        }
        if (attempt > 0) {
            std::this_thread::sleep_for(cfg.backoff_base * (1LL << std::min(attempt - 1, 20)));
        }
        httplib::Client client(endpoint.scheme_host_port);
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);
        const auto response = client.Post(endpoint.path, headers, body, "application/json");

        if (!response) {
            last_failure = fmt::format("request failed: {}", httplib::to_string(response.error()));
        } else if (response->status == 401 || response->status == 403) {
            throw AuthError(fmt::format("LLM endpoint rejected the credentials (HTTP {})", response->status));
        } else if (retryable_status(response->status)) {
            last_failure = fmt::format("HTTP {}", response->status);
        } else if (response->status < 200 || response->status >= 300) {
            throw LlmError(fmt::format("LLM endpoint returned HTTP {}", response->status));
        } else {
            json reply;
            try {
                reply = json::parse(response->body);
            } catch (const json::parse_error&) {
                throw LlmError("LLM endpoint returned a body that is not JSON");
            }
            const json* content = nullptr;
            if (reply.contains("choices") && reply["choices"].is_array() && !reply["choices"].empty()) {
                const auto& choice = reply["choices"][0];
                if (choice.contains("message") && choice["message"].contains("content")) {
                    content = &choice["message"]["content"];
                }
            }
            if (content == nullptr || !content->is_string()) {
                throw LlmError("LLM response has no choices[0].message.content string");
            }
            std::string text = content->get<std::string>();
            if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); })) {
                throw LlmError("LLM endpoint returned an empty completion");
            }
            return text;
        }
        if (attempt >= cfg.max_retries) {
            throw LlmError(fmt::format("LLM request failed after {} retries: {}", attempt, last_failure));
        }
    }
}

GeneratedReport generate_report(const FindingsDocument& findings, const LlmEndpointConfig& cfg,
                                std::string created_at) {
    const std::string prompt = build_prompt(findings);
    GeneratedReport report;
    report.text = chat_completion(cfg, system_message(), prompt, &report.retries);
    report.model_id = cfg.model_id;
    report.prompt_hash = sha256_hex(prompt);
    report.findings_hash = sha256_hex(serialize_findings(findings));
    report.created_at = std::move(created_at);
    return report;
}

// ---------------------------------------------------------------------------

RegionLexicon RegionLexicon::from_text(std::string_view text) {
    RegionLexicon lexicon;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        std::string line(text.substr(start, end - start));
        while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) {
            line.pop_back();
        }
        const auto first = line.find_first_not_of(" \t");
        if (first != std::string::npos && line[first] != '#') {
            lexicon.terms_.push_back(lower(line.substr(first)));
        }
        start = end + 1;
    }
    std::sort(lexicon.terms_.begin(), lexicon.terms_.end());
    lexicon.terms_.erase(std::unique(lexicon.terms_.begin(), lexicon.terms_.end()), lexicon.terms_.end());
    std::stable_sort(lexicon.terms_.begin(), lexicon.terms_.end(),
                     [](const std::string& a, const std::string& b) { return a.size() > b.size(); });
    return lexicon;
}

const RegionLexicon& RegionLexicon::builtin() {
    static const RegionLexicon lexicon = from_text(atlas_lexicon_text());
    return lexicon;
}

std::string_view to_string(ViolationKind kind) {
    switch (kind) {
        case ViolationKind::UnknownRegion: return "unknown_region";
        case ViolationKind::UngroundedNumber: return "ungrounded_number";
        case ViolationKind::ClassContradiction: return "class_contradiction";
    }
    return "unknown";
}

std::vector<GroundingViolation> ground_check(std::string_view report_text, const FindingsDocument& findings,
                                             const RegionLexicon& lexicon) {
    std::vector<GroundingViolation> out;
    const std::string text = lower(report_text);

    std::vector<std::string> document_regions;
    for (const auto& r : findings.regions) {
        document_regions.push_back(lower(r.name));
    }
    for (std::size_t i = 0; i < text.size();) {
        if (i > 0 && is_word_char(text[i - 1])) {
            ++i;
            continue;
        }
        std::size_t matched = 0;
        for (const auto& term : lexicon.terms()) {
            const std::size_t end = i + term.size();
            if (end <= text.size() && text.compare(i, term.size(), term) == 0 &&
                (end == text.size() || !is_word_char(text[end]) || !is_word_char(term.back()))) {
                matched = term.size();
                const bool known = std::any_of(document_regions.begin(), document_regions.end(),
                                               [&](const std::string& name) { return name.find(term) != std::string::npos; });
                if (!known) {
                    const std::string excerpt(report_text.substr(i, term.size()));
                    out.push_back({ViolationKind::UnknownRegion, excerpt,
                                   fmt::format("region '{}' is not among the findings' regions", excerpt)});
                }
                break;
            }
        }
        i += matched > 0 ? matched : 1;
    }

    std::vector<double> values;
    for (const auto& r : findings.regions) {
        values.push_back(r.percentage);
    }
    const auto& m = findings.segmentation_metrics;
    values.push_back(m.dsc * 100.0);
    values.push_back(m.iou * 100.0);
    values.push_back(m.alpha_star);
    if (findings.prediction_confidence) {
        values.push_back(*findings.prediction_confidence * 100.0);
    }
    static const std::regex percent_re(R"((\d+(?:\.\d+)?)\s*(%|percent\b))", std::regex::icase);
    const std::string original(report_text);
    for (auto it = std::sregex_iterator(original.begin(), original.end(), percent_re); it != std::sregex_iterator();
         ++it) {
        const double v = std::stod((*it)[1].str());
        const bool grounded = std::any_of(values.begin(), values.end(),
                                          [&](double d) { return std::abs(d - v) <= 0.05 + 1e-9; });
        if (!grounded) {
            out.push_back({ViolationKind::UngroundedNumber, it->str(),
                           fmt::format("'{}' matches no value in the findings", it->str())});
        }
    }

    static const std::pair<TumorClass, std::regex> class_patterns[] = {
        {TumorClass::Glioma, std::regex(R"(\bgliomas?\b)", std::regex::icase)},
        {TumorClass::Meningioma, std::regex(R"(\bmeningiomas?\b)", std::regex::icase)},
        {TumorClass::PituitaryTumor, std::regex(R"(\bpituitary\b)", std::regex::icase)},
    };
    for (const auto& [cls, re] : class_patterns) {
        if (cls == findings.predicted_class) {
            continue;
        }
        for (auto it = std::sregex_iterator(original.begin(), original.end(), re); it != std::sregex_iterator();
             ++it) {
            out.push_back({ViolationKind::ClassContradiction, it->str(),
                           fmt::format("mentions '{}' but the predicted class is {}", it->str(),
                                       to_string(findings.predicted_class))});
        }
    }
    return out;
}

}  // namespace neurolens
