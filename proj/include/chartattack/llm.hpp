#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "chartattack/annotation.hpp"
#include "chartattack/eval.hpp"
#include "chartattack/misleader.hpp"

namespace chartattack::llm {

enum class Sampling { greedy };

struct GenerationParams {
    int max_new_tokens = 512;
    Sampling sampling = Sampling::greedy;
    int timeout_ms = 120000;
    int retries = 3;
    int backoff_ms = 200;
};

struct Endpoint {
    std::string url;      // full URL of the chat-completion route
    std::string api_key;  // optional bearer token
    std::string model;    // model identifier passed through verbatim

    bool configured() const { return !url.empty(); }
};

// Append-only JSONL transcript: one record per client call
// {ts, role, endpoint, prompt_sha256, response, latency_ms}.
class AuditLog {
public:
    explicit AuditLog(std::string path) : path_(std::move(path)) {}

    void record(const std::string& role, const std::string& endpoint,
                const std::string& prompt, const std::string& response, int64_t latency_ms);

    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::mutex mutex_;
};

// Chat-completion transport. One wire contract covers the attacker,
// reader and vision roles:
//   request  {model, messages: [{role, content | content_parts}],
//             max_tokens, temperature: 0}
//   response {text}
// content_parts entries are {type: "text", text} or
// {type: "image", image_b64}.
class ChatClient {
public:
    ChatClient(Endpoint endpoint, GenerationParams params = {}, AuditLog* audit = nullptr,
               std::string role = "attacker");

    // plain text in, raw model text out
    std::string complete(const std::string& prompt);

    // text + image prompt for vision endpoints
    std::string complete_with_image(const std::string& prompt, const std::string& image_png);

    const Endpoint& endpoint() const { return endpoint_; }

private:
    std::string post_messages(const json& messages, const std::string& audit_prompt);

    Endpoint endpoint_;
    GenerationParams params_;
    AuditLog* audit_;
    std::string role_;
};

// --- attacker prompting --------------------------------------------------------

struct Demonstration {
    std::string input_text;  // encoded (question + simplified annotation)
    std::vector<MisleaderApplication> applications;
};

struct AttackPromptSpec {
    ChartType chart_type = ChartType::v_bar;
    ChartAnnotation annotation;
    std::string question;
    eval::Answer correct_answer;
    std::vector<Demonstration> demonstrations;  // 0 or 5 by default
    bool allow_any_shot_count = false;
};

// Deterministic prompt: role framing, the three-step procedure with
// reasoning levels, per-technique procedures and snippet exemplars for
// every chart-type-compatible technique, output rules, demonstrations,
// the target instance, and the output-format stanza.
std::string build_attack_prompt(const AttackPromptSpec& spec);

// canonical rendering of an application list (demonstration outputs)
json application_to_json(const MisleaderApplication& app);
std::string applications_to_json_text(const std::vector<MisleaderApplication>& apps);

struct ParsedAttack {
    std::vector<MisleaderApplication> applications;
    std::vector<std::string> warnings;  // dropped items with reasons
};

// Extracts the first well-formed list of {technique, misleading_snippet,
// misleading_answer} records from arbitrary model text (tolerating code
// fences, prose, and Python literals), validates each item against the
// source annotation and correct answer, and drops invalid items with a
// reason. Throws ParseError when no list can be found at all.
ParsedAttack parse_attack_response(const std::string& text, const ChartAnnotation& source,
                                   const eval::Answer& correct_answer, double tol = 0.05);

// Python-literal/JSON hybrid value parser (single quotes, True/False/None).
json parse_python_literal(std::string_view text);

// --- vision helpers -------------------------------------------------------------

struct FormatFlags {
    bool has_grid = false;
    bool has_bands = false;
    bool is_stacked = false;

    bool operator==(const FormatFlags&) const = default;
};

struct FormatExtraction {
    FormatFlags flags;
    std::vector<std::string> warnings;
};

// Asks a vision endpoint three yes/no questions about a rendered chart.
// Unparseable replies default to false with a warning.
FormatExtraction extract_chart_format(const std::string& image_png, ChatClient& vision_client);

// parsing half of extract_chart_format, exposed for tests
FormatExtraction parse_format_reply(const std::string& reply);

// Queries a reader endpoint with a chart image and question; instructs
// final-answer-only responses.
std::string ask_reader(const std::string& image_png, const std::string& question,
                       ChatClient& reader_client);

std::string reader_prompt(const std::string& question);

}  // namespace chartattack::llm
