#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "chartattack/llm.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <sstream>
#include <thread>

#include "chartattack/errors.hpp"
#include "chartattack/patch.hpp"
#include "chartattack/util.hpp"

namespace chartattack::llm {

// --- audit log -------------------------------------------------------------

void AuditLog::record(const std::string& role, const std::string& endpoint,
                      const std::string& prompt, const std::string& response,
                      int64_t latency_ms) {
    json entry = json::object();
    entry["ts"] = util::now_unix_ms();
    entry["role"] = role;
    entry["endpoint"] = endpoint;
    entry["prompt_sha256"] = util::sha256_hex(prompt);
    entry["response"] = response;
    entry["latency_ms"] = latency_ms;
    std::lock_guard<std::mutex> lock(mutex_);
    util::append_line(path_, entry.dump());
}

// --- transport --------------------------------------------------------------

namespace {

struct UrlParts {
    std::string host_port;
    std::string path;
};

UrlParts split_url(const std::string& url) {
    std::size_t scheme = url.find("://");
    if (scheme == std::string::npos) throw EndpointError("bad endpoint URL: " + url);
    std::size_t path_start = url.find('/', scheme + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

ChatClient::ChatClient(Endpoint endpoint, GenerationParams params, AuditLog* audit,
                       std::string role)
    : endpoint_(std::move(endpoint)), params_(params), audit_(audit), role_(std::move(role)) {}

std::string ChatClient::post_messages(const json& messages, const std::string& audit_prompt) {
    if (!endpoint_.configured()) throw EndpointError("no endpoint configured for role " + role_);

    json request = json::object();
    request["model"] = endpoint_.model;
    request["messages"] = messages;
    request["max_tokens"] = params_.max_new_tokens;
    request["temperature"] = 0;
    std::string body = request.dump();

    UrlParts parts = split_url(endpoint_.url);
    auto started = std::chrono::steady_clock::now();
    std::string failure;
    for (int attempt = 0; attempt <= params_.retries; ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(std::chrono::milliseconds(params_.backoff_ms));
        httplib::Client client(parts.host_port);
        client.set_read_timeout(params_.timeout_ms / 1000, (params_.timeout_ms % 1000) * 1000);
        client.set_connection_timeout(params_.timeout_ms / 1000,
                                      (params_.timeout_ms % 1000) * 1000);
        httplib::Headers headers;
        if (!endpoint_.api_key.empty())
            headers.emplace("Authorization", "Bearer " + endpoint_.api_key);

        auto res = client.Post(parts.path, headers, body, "application/json");
        if (!res) {
            failure = "endpoint unreachable: " + endpoint_.url;
            continue;  // transport errors are retryable
        }
        if (res->status >= 500) {
            failure = "endpoint returned status " + std::to_string(res->status);
            continue;
        }
        auto latency = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - started)
                           .count();
        if (res->status < 200 || res->status >= 300) {
            if (audit_) audit_->record(role_, endpoint_.url, audit_prompt,
                                       "<error: status " + std::to_string(res->status) + ">",
                                       latency);
            throw EndpointError("endpoint returned status " + std::to_string(res->status),
                                res->status);
        }
        std::string text;
        try {
            json response = json::parse(res->body);
            text = response.at("text").get<std::string>();
        } catch (const json::exception& e) {
            if (audit_) audit_->record(role_, endpoint_.url, audit_prompt,
                                       "<error: malformed response body>", latency);
            throw EndpointError(std::string("malformed endpoint response: ") + e.what());
        }
        if (text.empty()) {
            if (audit_) audit_->record(role_, endpoint_.url, audit_prompt, "<error: empty>", latency);
            throw EndpointError("endpoint returned an empty response");
        }
        if (audit_) audit_->record(role_, endpoint_.url, audit_prompt, text, latency);
        return text;
    }
    auto latency = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - started)
                       .count();
    if (audit_) audit_->record(role_, endpoint_.url, audit_prompt, "<error: " + failure + ">",
                               latency);
    throw EndpointError(failure + " (after " + std::to_string(params_.retries + 1) + " attempts)");
}

std::string ChatClient::complete(const std::string& prompt) {
    json messages = json::array();
    messages.push_back({{"role", "user"}, {"content", prompt}});
    return post_messages(messages, prompt);
}

std::string ChatClient::complete_with_image(const std::string& prompt,
                                            const std::string& image_png) {
    json parts = json::array();
    parts.push_back({{"type", "text"}, {"text", prompt}});
    parts.push_back({{"type", "image"}, {"image_b64", util::base64_encode(image_png)}});
    json messages = json::array();
    messages.push_back({{"role", "user"}, {"content_parts", parts}});
    return post_messages(messages, prompt);
}

// --- attacker prompt ----------------------------------------------------------

namespace {

struct TypeContext {
    std::string long_name;     // vertical bar chart ("v_bar")
    std::string plural;        // vertical bar charts
    std::string value_axis;    // y_axis
    std::string category_axis; // x_axis
    std::string stacked_key;   // Stacked vertical bar chart
    std::string dir_from;      // bottom-to-top
    std::string dir_to;        // top-to-bottom
};

TypeContext type_context(ChartType t) {
    switch (t) {
        case ChartType::v_bar:
            return {"vertical bar chart (\"v_bar\")", "vertical bar charts", "y_axis",
                    "x_axis", "Stacked vertical bar chart", "bottom-to-top", "top-to-bottom"};
        case ChartType::h_bar:
            return {"horizontal bar chart (\"h_bar\")", "horizontal bar charts", "x_axis",
                    "y_axis", "Stacked horizontal bar chart", "left-to-right", "right-to-left"};
        case ChartType::line:
            return {"line chart (\"line\")", "line charts", "y_axis",
                    "x_axis", "Stacked vertical bar chart", "bottom-to-top", "top-to-bottom"};
    }
    return {};
}

std::string technique_block(MisleaderKind kind, const TypeContext& ctx) {
    std::ostringstream s;
    switch (kind) {
        case MisleaderKind::dual_axis:
            s << "- dual_axis: Two independent axes are layered on top of each other with "
                 "inappropriate scaling. This results in a misleading narrative about the "
                 "relationship between the two. The process to apply this technique is the "
                 "following:\n"
              << "  - Ensure there are exactly two categories to compare.\n"
              << "  - Find the minimum and maximum values for the secondary category.\n"
              << "    - Keep the \"min_value\" and \"max_value\" for the primary category.\n"
              << "    - Compute the \"min_value\" and \"max_value\" for the second category.\n"
              << "    - Configure a secondary axis:\n"
              << "      - Insert a \"secondary_axis\" key at the root of the chart annotations.\n"
              << "      - Set \"min_value\" and \"max_value\" to match the second dataset's range.\n"
              << "      - Set \"show_axis\": True to ensure visibility.\n"
              << "      - Set \"direction\": \"" << ctx.dir_from << "\" for " << ctx.plural << ".\n"
              << "      - Set \"scale\": \"linear\".\n"
              << "      - If the chart is a stacked bar chart, set stacked mode to \"False\".\n"
              << "  - Snippet example:\n"
              << "    {\"secondary_axis\": {\"" << ctx.value_axis
              << "\": {\"axis_range\": {\"min_value\": float/int, \"max_value\": float/int}, "
                 "\"show_axis\": True, \"direction\": \"" << ctx.dir_from
              << "\", \"scale\": \"linear\"}}}\n";
            break;
        case MisleaderKind::inverted_axis:
            s << "- inverted_axis: An inverted axis is oriented in an unconventional direction "
                 "and the perception of the data is reversed, thus misleading or confusing the "
                 "audience. The process to apply this technique is the following:\n"
              << "  - Change the \"direction\" field at the \"main_axes\" level of the "
                 "annotations file.\n"
              << "    - Change from \"" << ctx.dir_from << "\" to \"" << ctx.dir_to << "\".\n"
              << "  - Snippet example:\n"
              << "    {\"direction\": \"" << ctx.dir_to << "\"}\n";
            break;
        case MisleaderKind::log_scale:
            s << "- inappropriate_use_of_log_scale: Log scale is applied to non-exponential "
                 "data. The process to apply this technique is the following:\n"
              << "  - Change the \"scale\" field at the \"main_axes\" level of the annotations "
                 "to \"log\".\n"
              << "  - Snippet example:\n"
              << "    {\"scale\": \"log\"}\n";
            break;
        case MisleaderKind::line_misuse:
            s << "- inappropriate_use_of_line: A line chart is deemed inappropriate when used "
                 "in an unconventional way or in a way that results in incorrect interpretation "
                 "of the data or intentionally misleading the audience. Examples are encoding a "
                 "categorical variable on one of the axes or encoding the time dimension on the "
                 "y-axis.\n"
              << "  - Change the \"type\" field to \"line\".\n"
              << "  - Snippet example:\n"
              << "    {\"type\": \"line\"}\n";
            break;
        case MisleaderKind::stacked_misuse:
            s << "- inappropriate_use_of_stacked: Inappropriate use of stacked simply means too "
                 "many layers have been stacked upon each other, making the entire visualization "
                 "incomprehensible for the reader. The process to apply this technique is the "
                 "following:\n"
              << "  - Identify the chart type.\n"
              << "  - Check if the chart is already stacked:\n"
              << "    - \"" << ctx.stacked_key << "\" for " << ctx.plural << ".\n"
              << "    - Continue only if the value is \"False\".\n"
              << "  - Reduce to a single data category per bar:\n"
              << "    - Take all original categories and create a new dictionary where each "
                 "category has a single-element list containing its value.\n"
              << "    - Replace the \"data\" key in annotations with this new dictionary.\n"
              << "  - Reassign categories:\n"
              << "    - Set [\"" << ctx.category_axis << "\"][\"categories\"] to [\"\"].\n"
              << "  - Generate new colors:\n"
              << "    - Generate a distinct color for each original category.\n"
              << "    - Update \"colors\" and \"legend\" keys in annotations with these colors.\n"
              << "    - Set \"Chart legend\": True.\n"
              << "  - Enable stacked mode:\n"
              << "    - \"" << ctx.stacked_key << "\": True for " << ctx.plural << ".\n"
              << "  - Snippet example:\n"
              << "    {\"" << ctx.category_axis
              << "\": dict, \"data\": {\"__any__\": [float]}, \"colors\": {\"__any__\": "
                 "r\"^#[0-9A-Fa-f]{6}$\"}, \"" << ctx.stacked_key << "\": True}\n";
            break;
        case MisleaderKind::three_d:
            s << "- 3d: For 3D, the closer something is, the larger it appears, despite being "
                 "the same size in 3D perspective. The process to apply this technique is the "
                 "following:\n"
              << "  - Change the \"3D effect\" to True or add it if necessary.\n"
              << "  - Snippet example:\n"
              << "    {\"3D effect\": True}\n";
            break;
        case MisleaderKind::color_scheme:
            s << "- ineffective_color_scheme: In some cases, the color scheme selected is not "
                 "effective for the encoded data. Examples of this can include rainbow colors, "
                 "categorical colors on sequential data, and sequential colors on categorical "
                 "data. The process to apply this technique is the following:\n"
              << "  - Select a base color from the \"colors\" field.\n"
              << "  - Generate N different color variations as needed by slightly changing the "
                 "base color to keep all variations visually related.\n"
              << "  - If the \"colors\" field does not exist, insert one at the root level.\n"
              << "  - Snippet example:\n"
              << "    {\"colors\": {\"__any__\": r\"^#[0-9A-Fa-f]{6}$\"}}\n";
            break;
        case MisleaderKind::misrepresentation:
            s << "- misrepresentation: Misrepresentation occurs when the value labels provided "
                 "do not match the visual encoding. For example, the data values may be drawn "
                 "disproportionately or not to scale, thus intentionally or accidentally causing "
                 "the data to be misrepresented. The process to apply this technique is the "
                 "following:\n"
              << "  - Do not modify the values in the data field. This ensures the labels shown "
                 "in the chart remain truthful.\n"
              << "  - Generate scaling factors:\n"
              << "    - For each category in " << ctx.plural
              << ", generate a list of scaling factors (length = number of data points).\n"
              << "  - Hide the main axis representing the values:\n"
              << "    - Set main_axes[\"" << ctx.value_axis << "\"][\"show_axis\"] = False.\n"
              << "  - Add a \"scaling_factors\" key at the root of annotations with the "
                 "generated factors.\n"
              << "  - Snippet example:\n"
              << "    {\"scaling_factors\": {\"__any__\": [float]}}\n";
            break;
    }
    return s.str();
}

const char* kOutputFormat =
    "[{\"technique\": \"<name>\", \"misleading_snippet\": <only the modified portion of the "
    "dictionary>, \"misleading_answer\": <A single plausible but incorrect answer. It must "
    "match the type/unit of the correct answer and reflect a realistic misinterpretation "
    "caused by the applied misleading technique>}]";

std::string level_line(const std::vector<MisleaderKind>& kinds,
                       const std::vector<MisleaderKind>& catalog) {
    std::string out;
    for (MisleaderKind k : kinds) {
        if (std::find(catalog.begin(), catalog.end(), k) == catalog.end()) continue;
        if (!out.empty()) out += ", ";
        out += chartattack::to_string(k);
    }
    return out;
}

}  // namespace

json application_to_json(const MisleaderApplication& app) {
    json j = json::object();
    j["technique"] = chartattack::to_string(app.kind);
    j["misleading_snippet"] = app.patch.tree;
    j["misleading_answer"] = app.misleading_answer ? *app.misleading_answer : json(nullptr);
    return j;
}

std::string applications_to_json_text(const std::vector<MisleaderApplication>& apps) {
    json list = json::array();
    for (const MisleaderApplication& app : apps) list.push_back(application_to_json(app));
    return list.dump();
}

std::string build_attack_prompt(const AttackPromptSpec& spec) {
    if (!spec.allow_any_shot_count && spec.demonstrations.size() != 0 &&
        spec.demonstrations.size() != 5)
        throw Error("", "attack prompts take 0 or 5 demonstrations (got " +
                            std::to_string(spec.demonstrations.size()) + ")");

    TypeContext ctx = type_context(spec.chart_type);
    std::vector<MisleaderKind> catalog;
    for (MisleaderKind k : kAllMisleaders)
        if (type_compatible(spec.chart_type, k)) catalog.push_back(k);

    std::ostringstream p;
    p << "You are an expert in information visualization. You are provided with an accurate "
         "annotation dictionary for a " << ctx.long_name
      << ", along with a corresponding question and its correct answer. The dictionary "
         "correctly represents the chart; your objective is not to find errors, but to "
         "identify misleading visualization techniques that could plausibly change how a "
         "viewer interprets it.\n\n";

    p << "Step 1. Select techniques: For each technique, include it only if both conditions "
         "are met:\n"
      << "- Structural compatibility: The annotations dict contains the required fields for "
         "the technique.\n"
      << "- Contextual plausibility: Applying the technique could plausibly mislead the viewer "
         "into giving a different answer to the question.\n\n";

    p << "Step 2. Modify the annotations: For each selected technique:\n"
      << "- Produce a minimal Python dictionary snippet showing only the modified fields.\n"
      << "- Do not alter unrelated fields.\n"
      << "- Keep the rest of the chart intact (axes, labels, title, legend, etc.).\n"
      << "- Adjust reasoning depth based on the technique:\n";
    std::string l1 = level_line({MisleaderKind::inverted_axis, MisleaderKind::log_scale,
                                 MisleaderKind::three_d}, catalog);
    std::string l2 = level_line({MisleaderKind::line_misuse, MisleaderKind::color_scheme}, catalog);
    std::string l3 = level_line({MisleaderKind::dual_axis, MisleaderKind::stacked_misuse,
                                 MisleaderKind::misrepresentation}, catalog);
    if (!l1.empty())
        p << "  - Level 1 - Simple structural edits:\n    - Techniques: " << l1
          << "\n    - Action: Modify only a single field or flag; no additional inference or "
             "structural changes needed.\n";
    if (!l2.empty())
        p << "  - Level 2 - Contextual modifications:\n    - Techniques: " << l2
          << "\n    - Action: Analyze the chart type and context, then modify related fields "
             "consistently.\n";
    if (!l3.empty())
        p << "  - Level 3 - Structural reconstruction:\n    - Techniques: " << l3
          << "\n    - Action: Perform multi-step reasoning; restructure or synthesize "
             "dictionary sections (e.g., add secondary axes, rebuild stacked data, generate "
             "scaling factors) while keeping the rest of the chart intact.\n";
    p << "- Hierarchy note: All field paths in snippets are shown relative to their position "
         "in the chart annotations dictionary.\n"
      << "  - Root-level fields (e.g., \"3D effect\", \"secondary_axis\", \"colors\") belong "
         "directly under the chart's main dictionary.\n"
      << "  - Structural or axis-related fields (e.g., \"direction\", \"scale\", "
         "\"show_axis\") are assumed to be nested under \"main_axes\".\n"
      << "  - When in doubt, preserve the existing hierarchy from the input annotations; only "
         "modify fields necessary for the technique.\n\n";

    p << "Step 3. Output format:\n"
      << "Output a list of Python dictionaries, where each dictionary has the following keys:\n"
      << kOutputFormat << "\n\n";

    p << "Allowed misleading techniques:\n";
    for (MisleaderKind k : catalog) p << technique_block(k, ctx);
    p << "\n";

    p << "Output rules:\n"
      << "- Only apply techniques that are both structurally and contextually plausible.\n"
      << "- Always output a list of Python dictionaries of results.\n"
      << "- Do not provide additional explanations.\n"
      << "- Only include techniques that truly apply.\n"
      << "- Ensure the misleading_answer is plausible and matches the type of the correct "
         "answer.\n\n";

    if (!spec.demonstrations.empty()) {
        p << "Examples:\n\n";
        for (const Demonstration& demo : spec.demonstrations) {
            p << "INPUT:\n" << demo.input_text << "\n"
              << "OUTPUT:\n" << applications_to_json_text(demo.applications) << "\n\n";
        }
    }

    p << "Chart annotations:\n" << annotation_to_json(spec.annotation).dump(2) << "\n"
      << "Question: " << spec.question << "\n"
      << "Correct answer: " << spec.correct_answer.display() << "\n\n";

    p << "Output the selected misleading techniques using the following format. Do not provide "
         "any additional information:\n"
      << kOutputFormat << "\n";
    return p.str();
}

// --- Python-literal parsing -----------------------------------------------------

namespace {

class LiteralParser {
public:
    explicit LiteralParser(std::string_view text) : text_(text) {}

    json parse() {
        json v = parse_value();
        return v;
    }

    std::size_t consumed() const { return pos_; }

private:
    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    [[noreturn]] void fail(const std::string& why) {
        throw ParseError("", "literal parse failed at offset " + std::to_string(pos_) + ": " + why);
    }

    char peek() {
        if (pos_ >= text_.size()) fail("unexpected end of input");
        return text_[pos_];
    }

    bool try_keyword(std::string_view word) {
        if (text_.substr(pos_, word.size()) != word) return false;
        std::size_t end = pos_ + word.size();
        if (end < text_.size() &&
            (std::isalnum(static_cast<unsigned char>(text_[end])) || text_[end] == '_'))
            return false;
        pos_ = end;
        return true;
    }

    json parse_value() {
        skip_ws();
        char c = peek();
        if (c == '{') return parse_dict();
        if (c == '[') return parse_list();
        if (c == '"' || c == '\'') return json(parse_string());
        if (try_keyword("True") || try_keyword("true")) return json(true);
        if (try_keyword("False") || try_keyword("false")) return json(false);
        if (try_keyword("None") || try_keyword("null")) return json(nullptr);
        if (c == '-' || c == '+' || std::isdigit(static_cast<unsigned char>(c)))
            return parse_number_value();
        fail(std::string("unexpected character '") + c + "'");
    }

    std::string parse_string() {
        char quote = peek();
        ++pos_;
        std::string out;
        while (true) {
            if (pos_ >= text_.size()) fail("unterminated string");
            char c = text_[pos_++];
            if (c == quote) break;
            if (c == '\\') {
                if (pos_ >= text_.size()) fail("dangling escape");
                char e = text_[pos_++];
                switch (e) {
                    case 'n': out.push_back('\n'); break;
                    case 't': out.push_back('\t'); break;
                    case 'r': out.push_back('\r'); break;
                    case '\\': out.push_back('\\'); break;
                    case '\'': out.push_back('\''); break;
                    case '"': out.push_back('"'); break;
                    case 'u': {
                        if (pos_ + 4 > text_.size()) fail("short unicode escape");
                        unsigned code = 0;
                        for (int i = 0; i < 4; ++i) {
                            char h = text_[pos_++];
                            int d = h >= '0' && h <= '9'   ? h - '0'
                                    : h >= 'a' && h <= 'f' ? h - 'a' + 10
                                    : h >= 'A' && h <= 'F' ? h - 'A' + 10
                                                           : -1;
                            if (d < 0) fail("bad unicode escape");
                            code = code * 16 + static_cast<unsigned>(d);
                        }
                        // UTF-8 encode (BMP only, surrogate pairs unsupported)
                        if (code < 0x80) {
                            out.push_back(static_cast<char>(code));
                        } else if (code < 0x800) {
                            out.push_back(static_cast<char>(0xC0 | (code >> 6)));
                            out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
                        } else {
                            out.push_back(static_cast<char>(0xE0 | (code >> 12)));
                            out.push_back(static_cast<char>(0x80 | ((code >> 6) & 0x3F)));
                            out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
                        }
                        break;
                    }
                    default: out.push_back(e);
                }
            } else {
                out.push_back(c);
            }
        }
        return out;
    }

    json parse_number_value() {
        const char* begin = text_.data() + pos_;
        char* end = nullptr;
        double v = std::strtod(begin, &end);
        if (end == begin) fail("bad number");
        pos_ += static_cast<std::size_t>(end - begin);
        if (v == std::floor(v) && std::fabs(v) < 9.007199254740992e15) {
            // keep integers integral
            std::string_view token(begin, static_cast<std::size_t>(end - begin));
            if (token.find('.') == std::string_view::npos &&
                token.find('e') == std::string_view::npos &&
                token.find('E') == std::string_view::npos)
                return json(static_cast<int64_t>(v));
        }
        return json(v);
    }

    json parse_dict() {
        ++pos_;  // '{'
        json out = json::object();
        skip_ws();
        if (peek() == '}') {
            ++pos_;
            return out;
        }
        while (true) {
            skip_ws();
            if (peek() != '"' && peek() != '\'') fail("dict keys must be strings");
            std::string key = parse_string();
            skip_ws();
            if (peek() != ':') fail("expected ':' after dict key");
            ++pos_;
            out[key] = parse_value();
            skip_ws();
            char c = peek();
            if (c == ',') {
                ++pos_;
                skip_ws();
                if (peek() == '}') {  // trailing comma
                    ++pos_;
                    break;
                }
                continue;
            }
            if (c == '}') {
                ++pos_;
                break;
            }
            fail("expected ',' or '}' in dict");
        }
        return out;
    }

    json parse_list() {
        ++pos_;  // '['
        json out = json::array();
        skip_ws();
        if (peek() == ']') {
            ++pos_;
            return out;
        }
        while (true) {
            out.push_back(parse_value());
            skip_ws();
            char c = peek();
            if (c == ',') {
                ++pos_;
                skip_ws();
                if (peek() == ']') {
                    ++pos_;
                    break;
                }
                continue;
            }
            if (c == ']') {
                ++pos_;
                break;
            }
            fail("expected ',' or ']' in list");
        }
        return out;
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

}  // namespace

json parse_python_literal(std::string_view text) {
    LiteralParser parser(text);
    return parser.parse();
}

// --- attack response parsing -----------------------------------------------------

namespace {

// Lifts relative snippet paths into the full document hierarchy per the
// prompt's hierarchy note: bare axis fields nest under the value axis,
// bare axis objects under main_axes.
json normalize_snippet(const json& snippet, const ChartAnnotation& source) {
    json out = json::object();
    json value_axis_patch = json::object();
    json category_axis_patch = json::object();
    json main_axes_patch = json::object();

    for (const auto& [key, value] : snippet.items()) {
        if (key == "direction" || key == "scale" || key == "show_axis" || key == "axis_range") {
            value_axis_patch[key] = value;
        } else if (key == "categories") {
            category_axis_patch[key] = value;
        } else if (key == "x_axis" || key == "y_axis") {
            main_axes_patch[key] = value;
        } else {
            out[key] = value;
        }
    }
    if (!value_axis_patch.empty()) main_axes_patch[source.value_axis_key()] = value_axis_patch;
    if (!category_axis_patch.empty()) {
        std::string cat_key = source.category_axis_key();
        if (main_axes_patch.contains(cat_key)) {
            for (const auto& [k, v] : category_axis_patch.items()) main_axes_patch[cat_key][k] = v;
        } else {
            main_axes_patch[cat_key] = category_axis_patch;
        }
    }
    if (!main_axes_patch.empty()) {
        if (out.contains("main_axes")) {
            for (const auto& [k, v] : main_axes_patch.items()) out["main_axes"][k] = v;
        } else {
            out["main_axes"] = main_axes_patch;
        }
    }
    return out;
}

std::optional<json> extract_first_list(const std::string& text) {
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '[') continue;
        try {
            json v = parse_python_literal(std::string_view(text).substr(i));
            if (v.is_array()) return v;
        } catch (const ParseError&) {
            // try the next bracket
        }
    }
    // fall back to a single top-level dict
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '{') continue;
        try {
            json v = parse_python_literal(std::string_view(text).substr(i));
            if (v.is_object() && v.contains("technique")) {
                json list = json::array();
                list.push_back(v);
                return list;
            }
        } catch (const ParseError&) {
        }
    }
    return std::nullopt;
}

}  // namespace

ParsedAttack parse_attack_response(const std::string& text, const ChartAnnotation& source,
                                   const eval::Answer& correct_answer, double tol) {
    std::optional<json> list = extract_first_list(text);
    if (!list)
        throw ParseError("", "no technique list found in attacker response: " + text);

    ParsedAttack out;
    std::set<MisleaderKind> compatible = compatible_misleaders(source);

    for (const json& item : *list) {
        if (!item.is_object() || !item.contains("technique") || !item["technique"].is_string()) {
            out.warnings.push_back("dropped item without a technique name");
            continue;
        }
        std::string name = item["technique"].get<std::string>();
        std::optional<MisleaderKind> kind = try_misleader_from_string(name);
        if (!kind) {
            out.warnings.push_back("dropped unknown technique '" + name + "'");
            continue;
        }
        if (!compatible.count(*kind)) {
            out.warnings.push_back("dropped structurally incompatible technique '" + name + "'");
            continue;
        }
        if (!item.contains("misleading_snippet") || !item["misleading_snippet"].is_object()) {
            out.warnings.push_back("dropped '" + name + "': snippet is not a dictionary");
            continue;
        }

        Patch raw{normalize_snippet(item["misleading_snippet"], source)};
        ChartAnnotation patched;
        try {
            patched = apply_patch(source, raw);
        } catch (const PatchError& e) {
            out.warnings.push_back("dropped '" + name + "': snippet does not apply: " + e.what());
            continue;
        }
        Patch minimal = diff_patch(source, patched);
        if (minimal.empty()) {
            out.warnings.push_back("dropped '" + name + "': snippet does not change the chart");
            continue;
        }

        if (!item.contains("misleading_answer") || item["misleading_answer"].is_null()) {
            out.warnings.push_back("dropped '" + name + "': missing misleading answer");
            continue;
        }
        eval::Answer answer;
        try {
            answer = eval::Answer::from_json(item["misleading_answer"]);
        } catch (const ParseError&) {
            out.warnings.push_back("dropped '" + name + "': unusable misleading answer");
            continue;
        }
        if (answer.kind != correct_answer.kind) {
            out.warnings.push_back("dropped '" + name +
                                   "': answer type does not match the correct answer");
            continue;
        }
        if (eval::relaxed_match(answer, correct_answer, tol)) {
            out.warnings.push_back("dropped '" + name + "': answer equals the correct answer");
            continue;
        }

        MisleaderApplication app;
        app.kind = *kind;
        app.patch = std::move(minimal);
        app.misleading_answer = answer.to_json();
        app.provenance = Provenance::llm_attacker;
        out.applications.push_back(std::move(app));
    }
    return out;
}

// --- vision / reader -------------------------------------------------------------

namespace {

const char* kFormatPrompt =
    "Look at this chart image and answer three questions about its format. Reply with "
    "exactly three lines, nothing else:\n"
    "grid: yes or no\n"
    "bands: yes or no\n"
    "stacked: yes or no";

std::optional<bool> find_yes_no(const std::string& lower, const std::string& key) {
    std::size_t at = lower.find(key);
    if (at == std::string::npos) return std::nullopt;
    std::size_t yes = lower.find("yes", at);
    std::size_t no = lower.find("no", at);
    if (yes == std::string::npos && no == std::string::npos) return std::nullopt;
    if (yes == std::string::npos) return false;
    if (no == std::string::npos) return true;
    return yes < no;
}

}  // namespace

FormatExtraction parse_format_reply(const std::string& reply) {
    FormatExtraction out;
    std::string lower = util::to_lower(reply);
    struct Field {
        const char* key;
        bool FormatFlags::*member;
    };
    const Field fields[] = {{"grid", &FormatFlags::has_grid},
                            {"band", &FormatFlags::has_bands},
                            {"stack", &FormatFlags::is_stacked}};
    for (const Field& f : fields) {
        std::optional<bool> v = find_yes_no(lower, f.key);
        if (v) {
            out.flags.*f.member = *v;
        } else {
            out.warnings.push_back(std::string("could not parse '") + f.key +
                                   "' from the vision reply; defaulting to false");
        }
    }
    return out;
}

FormatExtraction extract_chart_format(const std::string& image_png, ChatClient& vision_client) {
    std::string reply = vision_client.complete_with_image(kFormatPrompt, image_png);
    return parse_format_reply(reply);
}

std::string reader_prompt(const std::string& question) {
    return question +
           "\nProvide only the final answer with no additional explanation. If the answer is "
           "numerical, enter only the number. If the answer is textual, enter a single word.";
}

std::string ask_reader(const std::string& image_png, const std::string& question,
                       ChatClient& reader_client) {
    return reader_client.complete_with_image(reader_prompt(question), image_png);
}

}  // namespace chartattack::llm
