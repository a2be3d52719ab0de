#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "chartattack/eval.hpp"
#include "chartattack/llm.hpp"
#include "chartattack/misleader.hpp"
#include "chartattack/render.hpp"

namespace chartattack::pipeline {

enum class CorpusSource { plotqa, chartqa, user };

std::string to_string(CorpusSource s);
CorpusSource corpus_source_from_string(std::string_view s);

// One corpus instance: annotation, question, correct answer, and the
// applications (with canonical misleading answers once filtered).
struct AttackVizRecord {
    std::string id;
    std::string split;  // train / validation / test / ""
    CorpusSource source = CorpusSource::user;
    ChartAnnotation annotation;
    std::string question;
    eval::Answer correct_answer;
    std::vector<MisleaderApplication> applications;
};

json record_to_json(const AttackVizRecord& r);
AttackVizRecord record_from_json(const json& j);

std::vector<AttackVizRecord> load_corpus(const std::string& path);
void save_corpus(const std::string& path, const std::vector<AttackVizRecord>& records);

// --- response cache -------------------------------------------------------------

// Content-addressed directory of reader responses keyed by
// sha256(record id, application index, variant, endpoint, prompt).
class ResponseCache {
public:
    explicit ResponseCache(std::string dir);

    static std::string key(const std::string& record_id, std::size_t app_index,
                           const std::string& variant, const std::string& endpoint,
                           const std::string& prompt);

    std::optional<std::string> get(const std::string& key) const;
    void put(const std::string& key, const std::string& response);
    bool enabled() const { return !dir_.empty(); }

private:
    std::string dir_;
};

// --- paired evaluation ------------------------------------------------------------

struct EvalGroupStats {
    std::size_t n = 0;
    double acc_clean = 0;
    double acc_misleading = 0;
    std::optional<double> dr_originally_correct;
    std::optional<double> dr_originally_incorrect;
};

struct EvaluationReport {
    json config;
    std::string reader_endpoint;
    std::size_t answered = 0;
    std::size_t unanswered = 0;
    // rollups: by reader, by misleader, and by chart type x misleader
    EvalGroupStats overall;
    std::map<std::string, EvalGroupStats> by_misleader;
    std::map<std::string, EvalGroupStats> by_type_and_misleader;  // "type/misleader"
    std::optional<eval::MultilabelF1> attacker;

    json to_json() const;
    std::string to_markdown() const;
};

struct EvalConfig {
    double tol = 0.05;
    int jobs = 1;
    bool strict = false;  // strict: reader failures abort instead of skipping
    std::string cache_dir;
    render::RenderConfig render;
};

// Renders the clean and patched chart for every (record, application)
// pair, queries the reader with the same question on both, and scores
// relaxed accuracy plus both conditional deception rates. Resumable via
// the response cache.
EvaluationReport run_paired_eval(const std::vector<AttackVizRecord>& corpus,
                                 llm::ChatClient& reader, const EvalConfig& cfg);

// attacker multi-label metrics between predicted and gold application sets
eval::MultilabelF1 attacker_f1(const std::vector<AttackVizRecord>& predicted,
                               const std::vector<AttackVizRecord>& gold);

// --- filtering & assembly -----------------------------------------------------------

struct RecordedDecision {
    std::string record_id;
    std::size_t app_index = 0;
    eval::FilterDecision decision;
};

json decision_to_json(const RecordedDecision& d);
RecordedDecision decision_from_json(const json& j);

// Keeps only applications with keep-decisions, attaching the canonical
// misleading answer; records with no surviving application are dropped.
std::vector<AttackVizRecord> assemble_corpus(const std::vector<AttackVizRecord>& records,
                                             const std::vector<RecordedDecision>& decisions);

// Per split x chart type: question count and per-misleader application
// counts (the corpus-statistics table shape).
struct StatsRow {
    std::string split;
    ChartType chart_type = ChartType::v_bar;
    std::size_t questions = 0;
    std::map<MisleaderKind, std::size_t> per_misleader;
};

std::vector<StatsRow> corpus_stats(const std::vector<AttackVizRecord>& records);
std::string stats_to_markdown(const std::vector<StatsRow>& rows);
json stats_to_json(const std::vector<StatsRow>& rows);

}  // namespace chartattack::pipeline
