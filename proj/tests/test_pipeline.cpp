#include <doctest.h>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <atomic>
#include <filesystem>
#include <map>
#include <thread>

#include "chartattack/pipeline.hpp"
#include "chartattack/raster.hpp"
#include "chartattack/util.hpp"
#include "fixtures.hpp"

using namespace chartattack;
using namespace chartattack::pipeline;

namespace {

AttackVizRecord make_record(const std::string& id, ChartAnnotation a, const std::string& question,
                            eval::Answer answer) {
    AttackVizRecord r;
    r.id = id;
    r.annotation = std::move(a);
    r.question = question;
    r.correct_answer = std::move(answer);
    return r;
}

MisleaderApplication rule_app(const ChartAnnotation& a, MisleaderKind kind,
                              std::optional<json> answer = std::nullopt) {
    MisleaderApplication app = apply(a, kind, 5);
    app.misleading_answer = std::move(answer);
    return app;
}

}  // namespace

TEST_SUITE_BEGIN("corpus_io");

TEST_CASE("records round-trip through JSONL") {
    ChartAnnotation a = fixtures::make_v_bar(2, 3);
    AttackVizRecord r = make_record("rec-1", a, "What is the tallest bar?", eval::Answer::number(43));
    r.split = "test";
    r.source = CorpusSource::plotqa;
    r.applications.push_back(rule_app(a, MisleaderKind::three_d, json(21)));

    json j = record_to_json(r);
    AttackVizRecord back = record_from_json(j);
    CHECK(back.id == r.id);
    CHECK(back.split == "test");
    CHECK(back.source == CorpusSource::plotqa);
    CHECK(back.annotation == r.annotation);
    CHECK(back.correct_answer == r.correct_answer);
    REQUIRE(back.applications.size() == 1);
    CHECK(back.applications[0].kind == MisleaderKind::three_d);
    CHECK(back.applications[0].patch == r.applications[0].patch);
    CHECK(*back.applications[0].misleading_answer == json(21));

    std::string path = (std::filesystem::temp_directory_path() / "ca_corpus_test.jsonl").string();
    save_corpus(path, {r});
    auto loaded = load_corpus(path);
    REQUIRE(loaded.size() == 1);
    CHECK(loaded[0].annotation == r.annotation);
    std::filesystem::remove(path);
}

TEST_SUITE_END();

TEST_SUITE_BEGIN("cache");

TEST_CASE("keys are stable and hits avoid recomputation") {
    std::string k1 = ResponseCache::key("rec", 0, "clean", "http://x", "prompt");
    CHECK(k1 == ResponseCache::key("rec", 0, "clean", "http://x", "prompt"));
    CHECK(k1 != ResponseCache::key("rec", 1, "clean", "http://x", "prompt"));
    CHECK(k1 != ResponseCache::key("rec", 0, "misleading", "http://x", "prompt"));

    std::string dir = (std::filesystem::temp_directory_path() / "ca_cache_test").string();
    std::filesystem::remove_all(dir);
    ResponseCache cache(dir);
    CHECK_FALSE(cache.get(k1).has_value());
    cache.put(k1, "answer!");
    REQUIRE(cache.get(k1).has_value());
    CHECK(*cache.get(k1) == "answer!");
    std::filesystem::remove_all(dir);
}

TEST_SUITE_END();

TEST_SUITE_BEGIN("paired_eval");

namespace {

// Reader mock scripted by image hash: answers looked up from a table
// prepared with the exact PNGs the pipeline will render.
struct MockReader {
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::atomic<int> calls{0};
    std::map<std::string, std::string> by_image_hash;
    std::string fallback = "0";

    MockReader() {
        server.Post("/chat", [this](const httplib::Request& req, httplib::Response& res) {
            ++calls;
            json body = json::parse(req.body);
            std::string b64 = body["messages"][0]["content_parts"][1]["image_b64"];
            auto it = by_image_hash.find(util::sha256_hex(b64));
            json reply = json::object();
            reply["text"] = it == by_image_hash.end() ? fallback : it->second;
            res.set_content(reply.dump(), "application/json");
        });
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }

    ~MockReader() {
        server.stop();
        thread.join();
    }

    void script(const std::string& png, const std::string& answer) {
        by_image_hash[util::sha256_hex(util::base64_encode(png))] = answer;
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port) + "/chat"; }
};

}  // namespace

TEST_CASE("a deceived mock reader produces acc_clean 1 and dr_correct 1") {
    ChartAnnotation a = fixtures::make_v_bar(1, 2);
    AttackVizRecord r = make_record("pe-1", a, "What is the first value?", eval::Answer::number(10));
    r.applications.push_back(rule_app(a, MisleaderKind::inverted_axis, json(99)));
    r.applications.push_back(rule_app(a, MisleaderKind::three_d, json(77)));

    EvalConfig cfg;
    cfg.tol = 0.05;
    std::string cache_dir = (std::filesystem::temp_directory_path() / "ca_pe_cache").string();
    std::filesystem::remove_all(cache_dir);
    cfg.cache_dir = cache_dir;

    MockReader mock;
    // script answers against the exact renders the pipeline will produce
    mock.script(render::render_png(a, cfg.render), "10");
    for (const auto& app : r.applications) {
        ChartAnnotation attacked = apply_patch(a, app.patch);
        mock.script(render::render_png(attacked, cfg.render),
                    app.misleading_answer->dump());
    }

    llm::GenerationParams params;
    params.timeout_ms = 10000;
    llm::ChatClient reader({mock.url(), "", "mock-reader"}, params, nullptr, "reader");

    EvaluationReport report = run_paired_eval({r}, reader, cfg);
    CHECK(report.answered == 2);
    CHECK(report.overall.n == 2);
    CHECK(report.overall.acc_clean == doctest::Approx(1.0));
    CHECK(report.overall.acc_misleading == doctest::Approx(0.0));
    REQUIRE(report.overall.dr_originally_correct.has_value());
    CHECK(*report.overall.dr_originally_correct == doctest::Approx(1.0));
    CHECK_FALSE(report.overall.dr_originally_incorrect.has_value());
    int calls_after_first = mock.calls.load();
    CHECK(calls_after_first == 4);  // 2 applications x (clean + misleading)

    // a warm cache answers everything without new endpoint calls
    EvaluationReport rerun = run_paired_eval({r}, reader, cfg);
    CHECK(mock.calls.load() == calls_after_first);
    CHECK(rerun.to_json() == report.to_json());  // byte-identical report

    std::filesystem::remove_all(cache_dir);
}

TEST_CASE("reader outages mark instances unanswered instead of crashing") {
    ChartAnnotation a = fixtures::make_v_bar(1, 2);
    AttackVizRecord r = make_record("pe-2", a, "q", eval::Answer::number(10));
    r.applications.push_back(rule_app(a, MisleaderKind::three_d, json(5)));

    EvalConfig cfg;
    llm::GenerationParams params;
    params.retries = 0;
    params.timeout_ms = 200;
    params.backoff_ms = 1;
    llm::ChatClient reader({"http://127.0.0.1:9/chat", "", "down"}, params, nullptr, "reader");
    EvaluationReport report = run_paired_eval({r}, reader, cfg);
    CHECK(report.answered == 0);
    CHECK(report.unanswered == 1);
}

TEST_SUITE_END();

TEST_SUITE_BEGIN("assembly");

TEST_CASE("two keeps and one reject assemble into two records") {
    std::vector<AttackVizRecord> records;
    for (int i = 0; i < 3; ++i) {
        ChartAnnotation a = fixtures::make_v_bar(1, 2);
        AttackVizRecord r = make_record("as-" + std::to_string(i), a, "q", eval::Answer::number(10));
        r.applications.push_back(rule_app(a, MisleaderKind::three_d));
        records.push_back(r);
    }
    std::vector<RecordedDecision> decisions;
    for (int i = 0; i < 3; ++i) {
        RecordedDecision d;
        d.record_id = "as-" + std::to_string(i);
        d.app_index = 0;
        d.decision.keep = i != 1;
        if (d.decision.keep) d.decision.canonical_misleading_answer = eval::Answer::number(55);
        else d.decision.reasons.push_back("rejected by the reader consensus");
        decisions.push_back(d);
    }
    auto out = assemble_corpus(records, decisions);
    REQUIRE(out.size() == 2);
    CHECK(out[0].id == "as-0");
    CHECK(out[1].id == "as-2");
    CHECK(*out[0].applications[0].misleading_answer == json(55));
}

TEST_CASE("decision JSON round-trips") {
    RecordedDecision d;
    d.record_id = "x";
    d.app_index = 3;
    d.decision.keep = true;
    d.decision.canonical_misleading_answer = eval::Answer::text("China");
    RecordedDecision back = decision_from_json(decision_to_json(d));
    CHECK(back.record_id == "x");
    CHECK(back.app_index == 3);
    CHECK(back.decision.keep);
    CHECK(back.decision.canonical_misleading_answer->text_value == "china");
}

TEST_SUITE_END();

TEST_SUITE_BEGIN("stats");

TEST_CASE("row sums equal total applications and match a hand tally") {
    std::vector<AttackVizRecord> records;
    std::size_t total_apps = 0;
    fixtures::Rng rng(19);
    for (int i = 0; i < 10; ++i) {
        ChartAnnotation a = i % 2 ? fixtures::make_v_bar(2, 3) : fixtures::make_h_bar(2, 3);
        AttackVizRecord r = make_record("st-" + std::to_string(i), a, "q", eval::Answer::number(1));
        r.split = i < 6 ? "train" : "test";
        for (MisleaderKind k : compatible_misleaders(a)) {
            if (rng.next_double() < 0.4) {
                r.applications.push_back(rule_app(a, k));
                ++total_apps;
            }
        }
        records.push_back(r);
    }
    auto rows = corpus_stats(records);
    std::size_t sum = 0, questions = 0;
    for (const auto& row : rows) {
        questions += row.questions;
        for (const auto& [k, n] : row.per_misleader) sum += n;
    }
    CHECK(sum == total_apps);
    CHECK(questions == 10);

    // hand tally for one cell: train x v_bar x three_d
    std::size_t expected = 0;
    for (const auto& r : records) {
        if (r.split != "train" || r.annotation.chart_type != ChartType::v_bar) continue;
        for (const auto& app : r.applications)
            if (app.kind == MisleaderKind::three_d) ++expected;
    }
    for (const auto& row : rows) {
        if (row.split == "train" && row.chart_type == ChartType::v_bar) {
            auto it = row.per_misleader.find(MisleaderKind::three_d);
            CHECK((it == row.per_misleader.end() ? 0 : it->second) == expected);
        }
    }
    // markdown table renders a dash for inapplicable cells
    std::string md = stats_to_markdown(rows);
    CHECK(md.find("| train | ") != std::string::npos);
}

TEST_CASE("attacker f1 compares predicted sets against gold by record id") {
    ChartAnnotation a = fixtures::make_v_bar(2, 3);
    AttackVizRecord gold = make_record("f1-1", a, "q", eval::Answer::number(1));
    gold.applications.push_back(rule_app(a, MisleaderKind::three_d));
    gold.applications.push_back(rule_app(a, MisleaderKind::inverted_axis));
    AttackVizRecord pred = gold;
    pred.applications.pop_back();  // predicts only three_d
    eval::MultilabelF1 f1 = attacker_f1({pred}, {gold});
    CHECK(f1.per_label_f1.at(MisleaderKind::three_d) == doctest::Approx(1.0));
    CHECK(f1.per_label_f1.at(MisleaderKind::inverted_axis) == doctest::Approx(0.0));
    CHECK(f1.micro_f1 == doctest::Approx(2.0 / 3.0));
}

TEST_SUITE_END();
