// chartattack: batch CLI over the misleading-chart pipeline.
//
// Exit codes: 0 success, 1 domain error (validation/incompatibility),
// 2 usage error, 3 external endpoint failure.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "chartattack/annotation.hpp"
#include "chartattack/bm25.hpp"
#include "chartattack/errors.hpp"
#include "chartattack/eval.hpp"
#include "chartattack/llm.hpp"
#include "chartattack/misleader.hpp"
#include "chartattack/patch.hpp"
#include "chartattack/pipeline.hpp"
#include "chartattack/raster.hpp"
#include "chartattack/render.hpp"
#include "chartattack/retrieval.hpp"
#include "chartattack/util.hpp"

namespace ca = chartattack;
using ca::json;

namespace {

constexpr const char* kVersion = "0.1.0";

// flags > environment > config file > defaults
struct Settings {
    json config = json::object();

    static std::string env(const char* name) {
        const char* v = std::getenv(name);
        return v ? v : "";
    }

    std::string get(const std::string& flag_value, const char* env_name,
                    const std::string& config_key, const std::string& fallback = "") const {
        if (!flag_value.empty()) return flag_value;
        std::string from_env = env(env_name);
        if (!from_env.empty()) return from_env;
        if (config.contains(config_key)) return config[config_key].get<std::string>();
        return fallback;
    }
};

struct GlobalOpts {
    uint64_t seed = 0;
    int jobs = 1;
    std::string config_path;
    bool json_errors = false;
    Settings settings;
};

void write_manifest(const std::string& command, const json& config,
                    const std::vector<std::string>& inputs, const std::vector<std::string>& outputs,
                    uint64_t seed, int64_t started_at) {
    if (outputs.empty()) return;
    json m = json::object();
    m["command"] = command;
    m["config"] = config;
    m["inputs"] = inputs;
    m["outputs"] = outputs;
    m["seed"] = seed;
    m["tool_version"] = kVersion;
    m["started_at"] = started_at;
    m["finished_at"] = ca::util::now_unix_ms();
    ca::util::write_file(outputs.front() + ".manifest.json", m.dump(2) + "\n");
}

ca::ChartAnnotation load_annotation(const std::string& path) {
    return ca::parse_annotation(ca::util::read_file(path));
}

ca::render::RenderConfig render_config_from(const GlobalOpts& g, int width, int height, int dpi,
                                            bool suppress_secondary) {
    ca::render::RenderConfig cfg;
    if (g.settings.config.contains("render"))
        cfg = ca::render::render_config_from_json(g.settings.config["render"]);
    if (width > 0) cfg.width = width;
    if (height > 0) cfg.height = height;
    if (dpi > 0) cfg.dpi = dpi;
    if (suppress_secondary) cfg.suppress_secondary_ticks = true;
    return cfg;
}

std::vector<ca::retrieval::RetrievalEntry> entries_from_corpus(
    const std::vector<ca::pipeline::AttackVizRecord>& records) {
    std::vector<ca::retrieval::RetrievalEntry> out;
    for (const auto& r : records) {
        ca::retrieval::RetrievalEntry e;
        e.id = r.id;
        e.chart_type = r.annotation.chart_type;
        e.text = ca::retrieval::encode_for_retrieval(r.question, r.annotation);
        for (const auto& app : r.applications) e.misleader_set.insert(app.kind);
        out.push_back(std::move(e));
    }
    return out;
}

std::map<std::string, std::vector<ca::retrieval::RetrievalEntry>> split_by_type(
    const std::vector<ca::retrieval::RetrievalEntry>& entries) {
    std::map<std::string, std::vector<ca::retrieval::RetrievalEntry>> out;
    for (const auto& e : entries) out[ca::to_string(e.chart_type)].push_back(e);
    return out;
}

int run(int argc, char** argv) {
    CLI::App app{"misleading-chart generation, retrieval and evaluation toolkit"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--seed", g.seed, "seed for all randomized steps");
    app.add_option("--jobs", g.jobs, "bounded worker pool size")->check(CLI::PositiveNumber);
    app.add_option("--config", g.config_path, "JSON config file");
    app.add_flag("--json-errors", g.json_errors, "machine-readable errors on stderr");

    // --- validate -------------------------------------------------------------
    auto* c_validate = app.add_subcommand("validate", "check an annotation's invariants");
    std::string validate_in, validate_csv;
    bool validate_json = false;
    c_validate->add_option("annotation", validate_in, "annotation JSON file")->required();
    c_validate->add_option("--csv", validate_csv, "cross-check against a category,series,value table");
    c_validate->add_flag("--json", validate_json, "emit the report as JSON");

    // --- simplify -------------------------------------------------------------
    auto* c_simplify = app.add_subcommand("simplify", "reduce a raw source document to a clean annotation");
    std::string simplify_in, simplify_out, simplify_image, simplify_vlm_url, simplify_vlm_key,
        simplify_vlm_model;
    bool simplify_minimal = false;
    c_simplify->add_option("raw", simplify_in, "raw source JSON file")->required();
    c_simplify->add_option("-o,--out", simplify_out, "output file (stdout when omitted)");
    c_simplify->add_flag("--minimal", simplify_minimal,
                         "also drop titles, legends, grids and bands (retrieval encoding form)");
    c_simplify->add_option("--format-from-image", simplify_image,
                           "extract grid/bands/stacked flags from a chart image via the vision endpoint");
    c_simplify->add_option("--vlm-url", simplify_vlm_url, "vision endpoint URL");
    c_simplify->add_option("--vlm-key", simplify_vlm_key, "vision endpoint key");
    c_simplify->add_option("--vlm-model", simplify_vlm_model, "vision model identifier");

    // --- apply ----------------------------------------------------------------
    auto* c_apply = app.add_subcommand("apply", "apply one misleading technique to an annotation");
    std::string apply_in, apply_out, apply_patch_out, apply_kind;
    c_apply->add_option("annotation", apply_in, "annotation JSON file")->required();
    c_apply->add_option("--misleader", apply_kind, "technique identifier")->required();
    c_apply->add_option("-o,--out", apply_out, "patched annotation output");
    c_apply->add_option("--patch-out", apply_patch_out, "patch (snippet) output");

    // --- compatible -----------------------------------------------------------
    auto* c_compatible = app.add_subcommand("compatible", "list techniques applicable to an annotation");
    std::string compatible_in;
    bool compatible_json = false;
    c_compatible->add_option("annotation", compatible_in)->required();
    c_compatible->add_flag("--json", compatible_json);

    // --- render ---------------------------------------------------------------
    auto* c_render = app.add_subcommand("render", "lower an annotation to SVG and optionally PNG");
    std::string render_in, render_svg_out, render_png_out;
    int render_width = 0, render_height = 0, render_dpi = 0;
    bool render_suppress = false;
    c_render->add_option("annotation", render_in)->required();
    c_render->add_option("--svg", render_svg_out, "SVG output path");
    c_render->add_option("--png", render_png_out, "PNG output path");
    c_render->add_option("--width", render_width);
    c_render->add_option("--height", render_height);
    c_render->add_option("--dpi", render_dpi);
    c_render->add_flag("--suppress-secondary-ticks", render_suppress);

    // --- pairs ----------------------------------------------------------------
    auto* c_pairs = app.add_subcommand("pairs", "build anchor-positive pairs from a corpus");
    std::string pairs_corpus, pairs_out;
    c_pairs->add_option("--corpus", pairs_corpus, "AttackViz-style JSONL corpus")->required();
    c_pairs->add_option("-o,--out", pairs_out, "pair JSONL output")->required();

    // --- downsample -----------------------------------------------------------
    auto* c_down = app.add_subcommand("downsample", "median-based frequency capping of pair files");
    std::string down_in, down_out, down_mode = "anchor";
    c_down->add_option("--pairs", down_in, "pair JSONL input")->required();
    c_down->add_option("-o,--out", down_out, "downsampled output")->required();
    c_down->add_option("--mode", down_mode)->check(CLI::IsMember({"anchor", "anchor_positive"}));

    // --- index ----------------------------------------------------------------
    auto* c_index = app.add_subcommand("index", "build per-chart-type retrieval indices");
    std::string index_corpus, index_out, index_mode = "bm25", index_embed_url, index_embed_key,
                                         index_cache;
    c_index->add_option("--corpus", index_corpus)->required();
    c_index->add_option("-o,--out", index_out, "index directory")->required();
    c_index->add_option("--mode", index_mode)->check(CLI::IsMember({"bm25", "embed"}));
    c_index->add_option("--embed-url", index_embed_url, "embedding provider URL");
    c_index->add_option("--embed-key", index_embed_key, "embedding provider key");
    c_index->add_option("--embed-cache", index_cache, "embedding cache directory");

    // --- retrieve ---------------------------------------------------------------
    auto* c_retrieve = app.add_subcommand("retrieve", "query an index for demonstrations");
    std::string ret_index, ret_question, ret_annotation, ret_queries, ret_mode = "auto",
                                         ret_embed_url, ret_embed_key, ret_cache;
    std::size_t ret_k = 5;
    bool ret_accuracy = false, ret_precision = false;
    c_retrieve->add_option("--index", ret_index)->required();
    c_retrieve->add_option("--question", ret_question);
    c_retrieve->add_option("--annotation", ret_annotation);
    c_retrieve->add_option("--query-corpus", ret_queries, "JSONL corpus of query records");
    c_retrieve->add_option("--k", ret_k);
    c_retrieve->add_option("--mode", ret_mode)->check(CLI::IsMember({"auto", "bm25", "embed"}));
    c_retrieve->add_flag("--eval-accuracy", ret_accuracy, "report Accuracy@k over the query corpus");
    c_retrieve->add_flag("--precision", ret_precision, "precision@k instead of hit@k");
    c_retrieve->add_option("--embed-url", ret_embed_url);
    c_retrieve->add_option("--embed-key", ret_embed_key);
    c_retrieve->add_option("--embed-cache", ret_cache);

    // --- attack -----------------------------------------------------------------
    auto* c_attack = app.add_subcommand("attack", "generate misleader applications for a corpus");
    std::string atk_corpus, atk_out, atk_mode = "rule", atk_demos, atk_index,
                atk_strategy = "retrieved", atk_llm_url, atk_llm_key, atk_llm_model, atk_audit,
                atk_retriever = "auto", atk_embed_url, atk_embed_key;
    std::vector<std::string> atk_kinds;
    int atk_shots = 5;
    double atk_tol = -1;
    c_attack->add_option("--corpus", atk_corpus)->required();
    c_attack->add_option("-o,--out", atk_out)->required();
    c_attack->add_option("--mode", atk_mode)->check(CLI::IsMember({"rule", "llm"}));
    c_attack->add_option("--misleader", atk_kinds,
                         "rule mode: restrict to these techniques (default: all compatible)");
    c_attack->add_option("--shots", atk_shots)->check(CLI::IsMember({0, 5}));
    c_attack->add_option("--demo-strategy", atk_strategy)
        ->check(CLI::IsMember({"retrieved", "random"}));
    c_attack->add_option("--demos", atk_demos, "demonstration corpus (JSONL with applications)");
    c_attack->add_option("--index", atk_index, "retrieval index over the demonstration corpus");
    c_attack->add_option("--retriever", atk_retriever)->check(CLI::IsMember({"auto", "bm25", "embed"}));
    c_attack->add_option("--embed-url", atk_embed_url);
    c_attack->add_option("--embed-key", atk_embed_key);
    c_attack->add_option("--llm-url", atk_llm_url, "attacker chat endpoint");
    c_attack->add_option("--llm-key", atk_llm_key);
    c_attack->add_option("--llm-model", atk_llm_model);
    c_attack->add_option("--audit", atk_audit, "audit log JSONL path");
    c_attack->add_option("--tol", atk_tol, "relaxed tolerance for answer screening");

    // --- eval -------------------------------------------------------------------
    auto* c_eval = app.add_subcommand("eval", "paired clean/misleading reader evaluation");
    std::string ev_corpus, ev_reader, ev_reader_key, ev_reader_model, ev_out, ev_md, ev_cache,
        ev_audit, ev_pred, ev_gold;
    double ev_tol = -1;
    bool ev_strict = false;
    int ev_width = 0, ev_height = 0, ev_dpi = 0;
    bool ev_suppress = false;
    c_eval->add_option("--corpus", ev_corpus, "corpus with canonical misleading answers");
    c_eval->add_option("--reader", ev_reader, "reader chat endpoint URL");
    c_eval->add_option("--reader-key", ev_reader_key);
    c_eval->add_option("--reader-model", ev_reader_model);
    c_eval->add_option("--tol", ev_tol, "relaxed accuracy tolerance (default 0.05)");
    c_eval->add_option("-o,--out", ev_out, "report JSON path");
    c_eval->add_option("--md", ev_md, "markdown summary path");
    c_eval->add_option("--cache-dir", ev_cache, "response cache directory");
    c_eval->add_flag("--strict", ev_strict, "abort on reader failures instead of skipping");
    c_eval->add_option("--attacker-pred", ev_pred, "predicted corpus for attacker F1");
    c_eval->add_option("--attacker-gold", ev_gold, "gold corpus for attacker F1");
    c_eval->add_option("--audit", ev_audit);
    c_eval->add_option("--width", ev_width);
    c_eval->add_option("--height", ev_height);
    c_eval->add_option("--dpi", ev_dpi);
    c_eval->add_flag("--suppress-secondary-ticks", ev_suppress);

    // --- filter -----------------------------------------------------------------
    auto* c_filter = app.add_subcommand("filter", "consistency-filter reader responses");
    std::string fl_corpus, fl_responses, fl_out;
    double fl_tol = -1, fl_sigma = 0.5;
    c_filter->add_option("--corpus", fl_corpus)->required();
    c_filter->add_option("--responses", fl_responses,
                         "JSONL of {record_id, app_index, model, clean_answer, attacked_answer}")
        ->required();
    c_filter->add_option("-o,--out", fl_out, "decision JSONL output")->required();
    c_filter->add_option("--tol", fl_tol);
    c_filter->add_option("--sigma", fl_sigma, "numeric consistency limit (population sigma)");

    // --- assemble ---------------------------------------------------------------
    auto* c_assemble = app.add_subcommand("assemble", "keep filtered applications and attach answers");
    std::string as_corpus, as_decisions, as_out;
    c_assemble->add_option("--corpus", as_corpus)->required();
    c_assemble->add_option("--decisions", as_decisions)->required();
    c_assemble->add_option("-o,--out", as_out)->required();

    // --- stats ------------------------------------------------------------------
    auto* c_stats = app.add_subcommand("stats", "corpus statistics by split, chart type and technique");
    std::string st_corpus;
    bool st_json = false;
    c_stats->add_option("--corpus", st_corpus)->required();
    c_stats->add_flag("--json", st_json);

    CLI11_PARSE(app, argc, argv);

    if (!g.config_path.empty()) g.settings.config = json::parse(ca::util::read_file(g.config_path));
    int64_t started_at = ca::util::now_unix_ms();

    auto pick_tol = [&](double flag_value) {
        if (flag_value >= 0) return flag_value;
        if (g.settings.config.contains("tol")) return g.settings.config["tol"].get<double>();
        return 0.05;
    };

    // ---------------------------------------------------------------------------
    if (*c_validate) {
        ca::ChartAnnotation a = load_annotation(validate_in);
        ca::ValidationReport report =
            validate_csv.empty()
                ? ca::validate(a)
                : ca::validate(a, ca::parse_csv_table(ca::util::read_file(validate_csv)));
        if (validate_json) {
            json j = json::object();
            j["ok"] = report.ok;
            json issues = json::array();
            for (const auto& i : report.issues)
                issues.push_back({{"path", i.path}, {"code", i.code}, {"message", i.message}});
            j["issues"] = std::move(issues);
            std::cout << j.dump(2) << "\n";
        } else {
            for (const auto& i : report.issues)
                std::cerr << i.path << ": " << i.code << ": " << i.message << "\n";
            std::cout << (report.ok ? "ok" : "invalid") << "\n";
        }
        return report.ok ? 0 : 1;
    }

    if (*c_simplify) {
        ca::SimplifyMode mode =
            simplify_minimal ? ca::SimplifyMode::minimal : ca::SimplifyMode::core;
        ca::ChartAnnotation a = ca::simplify_annotation(ca::util::read_file(simplify_in), mode);
        if (!simplify_image.empty()) {
            ca::llm::Endpoint vlm{
                g.settings.get(simplify_vlm_url, "CHARTATTACK_VLM_URL", "vlm_url"),
                g.settings.get(simplify_vlm_key, "CHARTATTACK_VLM_KEY", "vlm_key"),
                g.settings.get(simplify_vlm_model, "", "vlm_model", "vision")};
            ca::llm::ChatClient client(vlm, {}, nullptr, "vision");
            ca::llm::FormatExtraction ext =
                ca::llm::extract_chart_format(ca::util::read_file(simplify_image), client);
            for (const auto& w : ext.warnings) std::cerr << "warning: " << w << "\n";
            a.grid_visible = ext.flags.has_grid;
            a.bands_visible = ext.flags.has_bands;
            if (a.chart_type != ca::ChartType::line) a.stacked = ext.flags.is_stacked;
        }
        std::string out = ca::serialize_annotation(a);
        if (simplify_out.empty()) {
            std::cout << out;
        } else {
            ca::util::write_file(simplify_out, out);
            write_manifest("simplify", json{{"minimal", simplify_minimal}}, {simplify_in},
                           {simplify_out}, g.seed, started_at);
        }
        return 0;
    }

    if (*c_apply) {
        ca::ChartAnnotation a = load_annotation(apply_in);
        ca::MisleaderKind kind = ca::misleader_from_string(apply_kind);
        ca::MisleaderApplication result = ca::apply(a, kind, g.seed);
        ca::ChartAnnotation patched = ca::apply_patch(a, result.patch);

        std::string stem = std::filesystem::path(apply_in).stem().string();
        std::string dir = std::filesystem::path(apply_in).parent_path().string();
        if (!dir.empty()) dir += "/";
        if (apply_out.empty()) apply_out = dir + stem + ".misleading.json";
        if (apply_patch_out.empty()) apply_patch_out = dir + stem + ".patch.json";
        ca::util::write_file(apply_out, ca::serialize_annotation(patched));
        ca::util::write_file(apply_patch_out, result.patch.tree.dump(2) + "\n");
        write_manifest("apply", json{{"misleader", apply_kind}}, {apply_in},
                       {apply_out, apply_patch_out}, g.seed, started_at);
        std::cout << apply_out << "\n" << apply_patch_out << "\n";
        return 0;
    }

    if (*c_compatible) {
        ca::ChartAnnotation a = load_annotation(compatible_in);
        std::set<ca::MisleaderKind> kinds = ca::compatible_misleaders(a);
        if (compatible_json) {
            json out = json::array();
            for (ca::MisleaderKind k : kinds) out.push_back(ca::to_string(k));
            std::cout << out.dump() << "\n";
        } else {
            for (ca::MisleaderKind k : kinds) std::cout << ca::to_string(k) << "\n";
        }
        return 0;
    }

    if (*c_render) {
        ca::ChartAnnotation a = load_annotation(render_in);
        ca::render::RenderConfig cfg =
            render_config_from(g, render_width, render_height, render_dpi, render_suppress);
        if (render_svg_out.empty() && render_png_out.empty()) {
            std::string stem = std::filesystem::path(render_in).stem().string();
            std::string dir = std::filesystem::path(render_in).parent_path().string();
            render_svg_out = (dir.empty() ? "" : dir + "/") + stem + ".svg";
        }
        std::vector<std::string> outputs;
        std::string svg = ca::render::render_svg(a, cfg);
        if (!render_svg_out.empty()) {
            ca::util::write_file(render_svg_out, svg);
            outputs.push_back(render_svg_out);
        }
        if (!render_png_out.empty()) {
            ca::util::write_file(render_png_out, ca::render::rasterize(svg, cfg));
            outputs.push_back(render_png_out);
        }
        write_manifest("render", ca::render::render_config_to_json(cfg), {render_in}, outputs,
                       g.seed, started_at);
        for (const auto& o : outputs) std::cout << o << "\n";
        return 0;
    }

    if (*c_pairs) {
        auto records = ca::pipeline::load_corpus(pairs_corpus);
        auto entries = entries_from_corpus(records);
        std::vector<ca::retrieval::AnchorPositivePair> all;
        for (auto& [type, group] : split_by_type(entries)) {
            auto pairs = ca::retrieval::build_pairs(group);
            all.insert(all.end(), pairs.begin(), pairs.end());
        }
        ca::util::write_file(pairs_out, ca::retrieval::pairs_to_jsonl(all));
        write_manifest("pairs", json{{"pairs", all.size()}}, {pairs_corpus}, {pairs_out}, g.seed,
                       started_at);
        std::cerr << all.size() << " pairs\n";
        return 0;
    }

    if (*c_down) {
        std::vector<ca::retrieval::AnchorPositivePair> pairs;
        std::istringstream in(ca::util::read_file(down_in));
        std::string line;
        while (std::getline(in, line)) {
            if (ca::util::trim(line).empty()) continue;
            json j = json::parse(line);
            ca::retrieval::AnchorPositivePair p;
            p.anchor.text = j.at("anchor_text").get<std::string>();
            p.positive.text = j.at("positive_text").get<std::string>();
            pairs.push_back(std::move(p));
        }
        auto mode = down_mode == "anchor" ? ca::retrieval::DownsampleMode::anchor
                                          : ca::retrieval::DownsampleMode::anchor_positive;
        auto [result, stats] = ca::retrieval::downsample(pairs, mode, g.seed);
        ca::util::write_file(down_out, ca::retrieval::pairs_to_jsonl(result));
        json stats_json = {{"mode", down_mode},
                           {"median", stats.median},
                           {"mean", stats.mean},
                           {"threshold", stats.threshold},
                           {"cap", stats.cap},
                           {"removed", stats.removed}};
        write_manifest("downsample", stats_json, {down_in}, {down_out}, g.seed, started_at);
        std::cerr << stats_json.dump() << "\n";
        return 0;
    }

    if (*c_index) {
        auto records = ca::pipeline::load_corpus(index_corpus);
        auto entries = entries_from_corpus(records);
        std::string embed_url = g.settings.get(index_embed_url, "CHARTATTACK_EMBED_URL", "embed_url");
        std::string embed_key = g.settings.get(index_embed_key, "CHARTATTACK_EMBED_KEY", "embed_key");
        for (auto& [type, group] : split_by_type(entries)) {
            if (index_mode == "embed") {
                if (embed_url.empty())
                    throw ca::EndpointError("embedding mode needs CHARTATTACK_EMBED_URL");
                ca::retrieval::EmbedProvider provider(embed_url, embed_key, index_cache);
                std::vector<std::string> texts;
                for (const auto& e : group) texts.push_back(e.text);
                auto vectors = provider.embed(texts);
                for (std::size_t i = 0; i < group.size(); ++i) group[i].vector = vectors[i];
            }
            ca::retrieval::save_index(index_out + "/" + type, group);
        }
        write_manifest("index", json{{"mode", index_mode}, {"entries", entries.size()}},
                       {index_corpus}, {index_out + "/index"}, g.seed, started_at);
        std::cerr << entries.size() << " entries indexed\n";
        return 0;
    }

    if (*c_retrieve) {
        auto query_one = [&](const ca::retrieval::RetrievalEntry& q, std::size_t k)
            -> std::vector<ca::retrieval::ScoredEntry> {
            static std::map<std::string, std::vector<ca::retrieval::RetrievalEntry>> loaded;
            std::string type = ca::to_string(q.chart_type);
            if (!loaded.count(type))
                loaded[type] = ca::retrieval::load_index(ret_index + "/" + type);
            auto& entries = loaded[type];
            bool use_embed = ret_mode == "embed" ||
                             (ret_mode == "auto" && !entries.empty() && entries[0].vector);
            if (use_embed) {
                static std::map<std::string, ca::retrieval::VectorIndex> vindices;
                if (!vindices.count(type)) vindices.emplace(type, ca::retrieval::VectorIndex(entries));
                std::string embed_url =
                    g.settings.get(ret_embed_url, "CHARTATTACK_EMBED_URL", "embed_url");
                std::string embed_key =
                    g.settings.get(ret_embed_key, "CHARTATTACK_EMBED_KEY", "embed_key");
                ca::retrieval::EmbedProvider provider(embed_url, embed_key, ret_cache);
                auto vec = provider.embed({q.text});
                return vindices.at(type).query(vec[0], k, q.id);
            }
            static std::map<std::string, ca::retrieval::Bm25Index> bindices;
            if (!bindices.count(type)) bindices.emplace(type, ca::retrieval::Bm25Index(entries));
            return bindices.at(type).query(q.text, k, q.id);
        };

        if (!ret_queries.empty()) {
            auto records = ca::pipeline::load_corpus(ret_queries);
            auto queries = entries_from_corpus(records);
            if (ret_accuracy) {
                double acc = ca::retrieval::accuracy_at_k(
                    queries, query_one, ret_k,
                    ret_precision ? ca::retrieval::AccuracyMode::precision
                                  : ca::retrieval::AccuracyMode::hit);
                json out = {{"k", ret_k},
                            {"mode", ret_precision ? "precision" : "hit"},
                            {"accuracy_at_k", acc},
                            {"queries", queries.size()}};
                std::cout << out.dump() << "\n";
            } else {
                for (const auto& q : queries) {
                    json hits = json::array();
                    for (const auto& s : query_one(q, ret_k))
                        hits.push_back({{"id", s.entry->id}, {"score", s.score}});
                    std::cout << json{{"query_id", q.id}, {"hits", hits}}.dump() << "\n";
                }
            }
            return 0;
        }
        if (ret_question.empty() || ret_annotation.empty())
            throw CLI::ValidationError("retrieve",
                                       "need --query-corpus or both --question and --annotation");
        ca::retrieval::RetrievalEntry q;
        ca::ChartAnnotation a = load_annotation(ret_annotation);
        q.id = "";
        q.chart_type = a.chart_type;
        q.text = ca::retrieval::encode_for_retrieval(ret_question, a);
        json hits = json::array();
        for (const auto& s : query_one(q, ret_k))
            hits.push_back({{"id", s.entry->id}, {"score", s.score}, {"text", s.entry->text}});
        std::cout << hits.dump(2) << "\n";
        return 0;
    }

    if (*c_attack) {
        auto records = ca::pipeline::load_corpus(atk_corpus);
        double tol = pick_tol(atk_tol);

        if (atk_mode == "rule") {
            std::vector<ca::MisleaderKind> restrict;
            for (const auto& name : atk_kinds) restrict.push_back(ca::misleader_from_string(name));
            ca::Rng base(g.seed);
            for (std::size_t ri = 0; ri < records.size(); ++ri) {
                auto& r = records[ri];
                r.applications.clear();
                std::set<ca::MisleaderKind> kinds = ca::compatible_misleaders(r.annotation);
                ca::Rng rng = base.fork(ri);
                for (ca::MisleaderKind k : kinds) {
                    if (!restrict.empty() &&
                        std::find(restrict.begin(), restrict.end(), k) == restrict.end())
                        continue;
                    r.applications.push_back(ca::apply(r.annotation, k, rng.next_u64()));
                }
            }
        } else {
            ca::llm::Endpoint ep{g.settings.get(atk_llm_url, "CHARTATTACK_LLM_URL", "llm_url"),
                                 g.settings.get(atk_llm_key, "CHARTATTACK_LLM_KEY", "llm_key"),
                                 g.settings.get(atk_llm_model, "", "llm_model", "attacker")};
            std::optional<ca::llm::AuditLog> audit;
            if (!atk_audit.empty()) audit.emplace(atk_audit);
            ca::llm::ChatClient client(ep, {}, audit ? &*audit : nullptr, "attacker");

            std::vector<ca::pipeline::AttackVizRecord> demo_records;
            if (atk_shots > 0) {
                if (atk_demos.empty())
                    throw ca::Error("", "--shots 5 needs a --demos corpus");
                demo_records = ca::pipeline::load_corpus(atk_demos);
            }
            std::map<std::string, std::vector<ca::retrieval::RetrievalEntry>> demo_by_type =
                split_by_type(entries_from_corpus(demo_records));
            std::map<std::string, const ca::pipeline::AttackVizRecord*> demo_lookup;
            for (const auto& d : demo_records) demo_lookup[d.id] = &d;

            // per-type lazy BM25 / vector indices over the demonstration corpus
            std::map<std::string, ca::retrieval::Bm25Index> bm25;
            std::map<std::string, ca::retrieval::VectorIndex> vecidx;
            auto retrieve_demos = [&](const ca::pipeline::AttackVizRecord& r, std::size_t k) {
                std::string type = ca::to_string(r.annotation.chart_type);
                std::string text =
                    ca::retrieval::encode_for_retrieval(r.question, r.annotation);
                std::vector<std::string> ids;
                if (!atk_index.empty()) {
                    auto entries = ca::retrieval::load_index(atk_index + "/" + type);
                    bool use_embed = atk_retriever == "embed" ||
                                     (atk_retriever == "auto" && !entries.empty() &&
                                      entries[0].vector.has_value());
                    if (use_embed) {
                        if (!vecidx.count(type))
                            vecidx.emplace(type, ca::retrieval::VectorIndex(entries));
                        ca::retrieval::EmbedProvider provider(
                            g.settings.get(atk_embed_url, "CHARTATTACK_EMBED_URL", "embed_url"),
                            g.settings.get(atk_embed_key, "CHARTATTACK_EMBED_KEY", "embed_key"),
                            "");
                        auto vec = provider.embed({text});
                        for (const auto& s : vecidx.at(type).query(vec[0], k, r.id))
                            ids.push_back(s.entry->id);
                        return ids;
                    }
                    if (!bm25.count(type)) bm25.emplace(type, ca::retrieval::Bm25Index(entries));
                    for (const auto& s : bm25.at(type).query(text, k, r.id))
                        ids.push_back(s.entry->id);
                    return ids;
                }
                if (!bm25.count(type)) bm25.emplace(type, ca::retrieval::Bm25Index(demo_by_type[type]));
                for (const auto& s : bm25.at(type).query(text, k, r.id)) ids.push_back(s.entry->id);
                return ids;
            };

            ca::Rng base(g.seed);
            for (std::size_t ri = 0; ri < records.size(); ++ri) {
                auto& r = records[ri];
                ca::llm::AttackPromptSpec spec;
                spec.chart_type = r.annotation.chart_type;
                spec.annotation = r.annotation;
                spec.question = r.question;
                spec.correct_answer = r.correct_answer;

                if (atk_shots > 0) {
                    std::vector<std::string> demo_ids;
                    if (atk_strategy == "retrieved") {
                        demo_ids = retrieve_demos(r, static_cast<std::size_t>(atk_shots));
                    } else {
                        // random same-chart-type demonstrations
                        std::string type = ca::to_string(r.annotation.chart_type);
                        const auto& candidates = demo_by_type[type];
                        ca::Rng rng = base.fork(ri);
                        auto order = rng.shuffled_indices(candidates.size());
                        for (std::size_t i = 0;
                             i < order.size() && demo_ids.size() < static_cast<std::size_t>(atk_shots);
                             ++i) {
                            if (candidates[order[i]].id != r.id)
                                demo_ids.push_back(candidates[order[i]].id);
                        }
                    }
                    for (const auto& id : demo_ids) {
                        auto it = demo_lookup.find(id);
                        if (it == demo_lookup.end()) continue;
                        ca::llm::Demonstration demo;
                        demo.input_text = ca::retrieval::encode_for_retrieval(
                            it->second->question, it->second->annotation);
                        demo.applications = it->second->applications;
                        spec.demonstrations.push_back(std::move(demo));
                    }
                    if (spec.demonstrations.size() != static_cast<std::size_t>(atk_shots)) {
                        std::cerr << "warning: record " << r.id << " got "
                                  << spec.demonstrations.size() << " demonstrations\n";
                        spec.allow_any_shot_count = true;
                    }
                }

                std::string response = client.complete(ca::llm::build_attack_prompt(spec));
                ca::llm::ParsedAttack parsed =
                    ca::llm::parse_attack_response(response, r.annotation, r.correct_answer, tol);
                for (const auto& w : parsed.warnings)
                    std::cerr << "warning: record " << r.id << ": " << w << "\n";
                r.applications = parsed.applications;
            }
        }

        ca::pipeline::save_corpus(atk_out, records);
        write_manifest("attack",
                       json{{"mode", atk_mode}, {"shots", atk_shots}, {"strategy", atk_strategy},
                            {"tol", tol}},
                       {atk_corpus}, {atk_out}, g.seed, started_at);
        std::size_t total = 0;
        for (const auto& r : records) total += r.applications.size();
        std::cerr << total << " applications over " << records.size() << " records\n";
        return 0;
    }

    if (*c_eval) {
        ca::pipeline::EvaluationReport report;
        bool ran_reader = false;
        if (!ev_corpus.empty() && !ev_reader.empty()) {
            auto records = ca::pipeline::load_corpus(ev_corpus);
            ca::pipeline::EvalConfig cfg;
            cfg.tol = pick_tol(ev_tol);
            cfg.jobs = g.jobs;
            cfg.strict = ev_strict;
            cfg.cache_dir = ev_cache;
            cfg.render = render_config_from(g, ev_width, ev_height, ev_dpi, ev_suppress);
            std::optional<ca::llm::AuditLog> audit;
            if (!ev_audit.empty()) audit.emplace(ev_audit);
            ca::llm::ChatClient reader({ev_reader, ev_reader_key, ev_reader_model}, {},
                                       audit ? &*audit : nullptr, "reader");
            report = ca::pipeline::run_paired_eval(records, reader, cfg);
            ran_reader = true;
        }
        if (!ev_pred.empty() && !ev_gold.empty()) {
            report.attacker = ca::pipeline::attacker_f1(ca::pipeline::load_corpus(ev_pred),
                                                        ca::pipeline::load_corpus(ev_gold));
        } else if (!ran_reader) {
            throw CLI::ValidationError(
                "eval", "need --corpus with --reader, or --attacker-pred with --attacker-gold");
        }
        std::string out_json = report.to_json().dump(2) + "\n";
        if (ev_out.empty()) {
            std::cout << out_json;
        } else {
            ca::util::write_file(ev_out, out_json);
            std::vector<std::string> outputs = {ev_out};
            if (!ev_md.empty()) {
                ca::util::write_file(ev_md, report.to_markdown());
                outputs.push_back(ev_md);
            }
            write_manifest("eval", report.config, {ev_corpus}, outputs, g.seed, started_at);
        }
        if (!ev_md.empty() && ev_out.empty()) ca::util::write_file(ev_md, report.to_markdown());
        return 0;
    }

    if (*c_filter) {
        auto records = ca::pipeline::load_corpus(fl_corpus);
        std::map<std::string, const ca::pipeline::AttackVizRecord*> by_id;
        for (const auto& r : records) by_id[r.id] = &r;

        // group response lines by (record, application)
        std::map<std::pair<std::string, std::size_t>, std::vector<ca::eval::ModelResponsePair>>
            grouped;
        std::istringstream in(ca::util::read_file(fl_responses));
        std::string line;
        while (std::getline(in, line)) {
            if (ca::util::trim(line).empty()) continue;
            json j = json::parse(line);
            ca::eval::ModelResponsePair pair;
            pair.model = j.at("model").get<std::string>();
            pair.clean_pred = ca::eval::Answer::from_json(j.at("clean_answer"));
            pair.attacked_pred = ca::eval::Answer::from_json(j.at("attacked_answer"));
            grouped[{j.at("record_id").get<std::string>(), j.at("app_index").get<std::size_t>()}]
                .push_back(std::move(pair));
        }

        ca::eval::FilterConfig cfg;
        cfg.tol = pick_tol(fl_tol);
        cfg.numeric_sigma_limit = fl_sigma;
        std::ostringstream out;
        std::size_t kept = 0;
        for (const auto& [key, responses] : grouped) {
            auto it = by_id.find(key.first);
            if (it == by_id.end())
                throw ca::Error("", "responses reference unknown record " + key.first);
            ca::pipeline::RecordedDecision d;
            d.record_id = key.first;
            d.app_index = key.second;
            d.decision = ca::eval::consistency_filter(responses, it->second->correct_answer, cfg);
            if (d.decision.keep) ++kept;
            out << ca::pipeline::decision_to_json(d).dump() << "\n";
        }
        ca::util::write_file(fl_out, out.str());
        write_manifest("filter", json{{"tol", cfg.tol}, {"sigma", cfg.numeric_sigma_limit}},
                       {fl_corpus, fl_responses}, {fl_out}, g.seed, started_at);
        std::cerr << kept << "/" << grouped.size() << " kept\n";
        return 0;
    }

    if (*c_assemble) {
        auto records = ca::pipeline::load_corpus(as_corpus);
        std::vector<ca::pipeline::RecordedDecision> decisions;
        std::istringstream in(ca::util::read_file(as_decisions));
        std::string line;
        while (std::getline(in, line)) {
            if (ca::util::trim(line).empty()) continue;
            decisions.push_back(ca::pipeline::decision_from_json(json::parse(line)));
        }
        auto out = ca::pipeline::assemble_corpus(records, decisions);
        ca::pipeline::save_corpus(as_out, out);
        write_manifest("assemble", json{{"kept_records", out.size()}}, {as_corpus, as_decisions},
                       {as_out}, g.seed, started_at);
        std::cerr << out.size() << " records kept\n";
        return 0;
    }

    if (*c_stats) {
        auto records = ca::pipeline::load_corpus(st_corpus);
        auto rows = ca::pipeline::corpus_stats(records);
        if (st_json)
            std::cout << ca::pipeline::stats_to_json(rows).dump(2) << "\n";
        else
            std::cout << ca::pipeline::stats_to_markdown(rows);
        return 0;
    }

    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    bool json_errors = false;
    for (int i = 1; i < argc; ++i)
        if (std::string(argv[i]) == "--json-errors") json_errors = true;

    auto emit = [&](const std::string& type, const std::string& message, const std::string& path) {
        if (json_errors) {
            json err = {{"error", {{"type", type}, {"message", message}, {"path", path}}}};
            std::cerr << err.dump() << "\n";
        } else {
            std::cerr << "error: " << message << "\n";
        }
    };

    try {
        return run(argc, argv);
    } catch (const ca::EndpointError& e) {
        emit("endpoint", e.what(), "");
        return 3;
    } catch (const ca::IncompatibleError& e) {
        emit("incompatible", e.what(), e.condition());
        return 1;
    } catch (const ca::Error& e) {
        emit(typeid(e).name(), e.what(), e.path());
        return 1;
    } catch (const json::exception& e) {
        emit("json", e.what(), "");
        return 1;
    } catch (const std::exception& e) {
        emit("internal", e.what(), "");
        return 1;
    }
}
