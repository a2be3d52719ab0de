#include "chartattack/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "chartattack/errors.hpp"
#include "chartattack/patch.hpp"
#include "chartattack/raster.hpp"
#include "chartattack/util.hpp"

namespace chartattack::pipeline {

std::string to_string(CorpusSource s) {
    switch (s) {
        case CorpusSource::plotqa: return "plotqa";
        case CorpusSource::chartqa: return "chartqa";
        case CorpusSource::user: return "user";
    }
    return "user";
}

CorpusSource corpus_source_from_string(std::string_view s) {
    if (s == "plotqa") return CorpusSource::plotqa;
    if (s == "chartqa") return CorpusSource::chartqa;
    if (s == "user") return CorpusSource::user;
    throw ParseError("source", "unknown corpus source '" + std::string(s) + "'");
}

json record_to_json(const AttackVizRecord& r) {
    json j = json::object();
    j["id"] = r.id;
    if (!r.split.empty()) j["split"] = r.split;
    j["source"] = to_string(r.source);
    j["annotation"] = annotation_to_json(r.annotation);
    j["question"] = r.question;
    j["correct_answer"] = r.correct_answer.to_json();
    json apps = json::array();
    for (const MisleaderApplication& app : r.applications) {
        json a = llm::application_to_json(app);
        a["provenance"] = app.provenance == Provenance::rule_based ? "rule_based" : "llm_attacker";
        apps.push_back(std::move(a));
    }
    j["applications"] = std::move(apps);
    return j;
}

AttackVizRecord record_from_json(const json& j) {
    AttackVizRecord r;
    r.id = j.at("id").get<std::string>();
    r.split = j.value("split", "");
    r.source = corpus_source_from_string(j.value("source", "user"));
    r.annotation = annotation_from_json(j.at("annotation"));
    r.question = j.at("question").get<std::string>();
    r.correct_answer = eval::Answer::from_json(j.at("correct_answer"));
    if (j.contains("applications")) {
        for (const json& a : j["applications"]) {
            MisleaderApplication app;
            app.kind = misleader_from_string(a.at("technique").get<std::string>());
            app.patch = Patch{a.at("misleading_snippet")};
            if (a.contains("misleading_answer") && !a["misleading_answer"].is_null())
                app.misleading_answer = a["misleading_answer"];
            app.provenance = a.value("provenance", "rule_based") == "llm_attacker"
                                 ? Provenance::llm_attacker
                                 : Provenance::rule_based;
            r.applications.push_back(std::move(app));
        }
    }
    return r;
}

std::vector<AttackVizRecord> load_corpus(const std::string& path) {
    std::string text = util::read_file(path);
    std::vector<AttackVizRecord> out;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (util::trim(line).empty()) continue;
        try {
            out.push_back(record_from_json(json::parse(line)));
        } catch (const json::parse_error& e) {
            throw ParseError(path + ":" + std::to_string(lineno),
                             std::string("malformed JSONL line: ") + e.what());
        }
    }
    return out;
}

void save_corpus(const std::string& path, const std::vector<AttackVizRecord>& records) {
    std::ostringstream out;
    for (const AttackVizRecord& r : records) out << record_to_json(r).dump() << "\n";
    util::write_file(path, out.str());
}

// --- response cache ---------------------------------------------------------------

ResponseCache::ResponseCache(std::string dir) : dir_(std::move(dir)) {
    if (!dir_.empty()) std::filesystem::create_directories(dir_);
}

std::string ResponseCache::key(const std::string& record_id, std::size_t app_index,
                               const std::string& variant, const std::string& endpoint,
                               const std::string& prompt) {
    std::string material = record_id + "\x1f" + std::to_string(app_index) + "\x1f" + variant +
                           "\x1f" + endpoint + "\x1f" + prompt;
    return util::sha256_hex(material);
}

std::optional<std::string> ResponseCache::get(const std::string& key) const {
    if (dir_.empty()) return std::nullopt;
    std::string path = dir_ + "/" + key + ".json";
    if (!std::filesystem::exists(path)) return std::nullopt;
    json j = json::parse(util::read_file(path));
    return j.at("response").get<std::string>();
}

void ResponseCache::put(const std::string& key, const std::string& response) {
    if (dir_.empty()) return;
    json j = json::object();
    j["response"] = response;
    std::string tmp = dir_ + "/." + key + ".tmp";
    util::write_file(tmp, j.dump());
    std::filesystem::rename(tmp, dir_ + "/" + key + ".json");
}

// --- paired evaluation ---------------------------------------------------------------

namespace {

struct PairResult {
    bool answered = false;
    std::string chart_type;
    std::string misleader;
    bool clean_correct = false;
    bool attacked_correct = false;
    bool has_misleading_answer = false;
    bool switched = false;  // attacked answer equals the misleading answer
};

struct GroupAccumulator {
    std::size_t n = 0;
    std::size_t clean_ok = 0;
    std::size_t attacked_ok = 0;
    std::size_t clean_ok_switched = 0;
    std::size_t clean_bad_switched = 0;
    std::size_t with_answer_clean_ok = 0;
    std::size_t with_answer_clean_bad = 0;

    void add(const PairResult& r) {
        ++n;
        if (r.clean_correct) ++clean_ok;
        if (r.attacked_correct) ++attacked_ok;
        if (r.has_misleading_answer) {
            if (r.clean_correct) {
                ++with_answer_clean_ok;
                if (r.switched) ++clean_ok_switched;
            } else {
                ++with_answer_clean_bad;
                if (r.switched) ++clean_bad_switched;
            }
        }
    }

    EvalGroupStats stats() const {
        EvalGroupStats s;
        s.n = n;
        if (n > 0) {
            s.acc_clean = static_cast<double>(clean_ok) / static_cast<double>(n);
            s.acc_misleading = static_cast<double>(attacked_ok) / static_cast<double>(n);
        }
        if (with_answer_clean_ok > 0)
            s.dr_originally_correct = static_cast<double>(clean_ok_switched) /
                                      static_cast<double>(with_answer_clean_ok);
        if (with_answer_clean_bad > 0)
            s.dr_originally_incorrect = static_cast<double>(clean_bad_switched) /
                                        static_cast<double>(with_answer_clean_bad);
        return s;
    }
};

json group_to_json(const EvalGroupStats& s) {
    json j = json::object();
    j["n"] = s.n;
    j["acc_clean"] = s.acc_clean;
    j["acc_misleading"] = s.acc_misleading;
    j["dr_originally_correct"] =
        s.dr_originally_correct ? json(*s.dr_originally_correct) : json(nullptr);
    j["dr_originally_incorrect"] =
        s.dr_originally_incorrect ? json(*s.dr_originally_incorrect) : json(nullptr);
    return j;
}

std::string pct(double v) { return util::format_number(std::round(v * 1000.0) / 10.0) + "%"; }

}  // namespace

json EvaluationReport::to_json() const {
    json j = json::object();
    j["config"] = config;
    j["reader_endpoint"] = reader_endpoint;
    j["answered"] = answered;
    j["unanswered"] = unanswered;
    j["overall"] = group_to_json(overall);
    json by_m = json::object();
    for (const auto& [k, v] : by_misleader) by_m[k] = group_to_json(v);
    j["by_misleader"] = std::move(by_m);
    json by_tm = json::object();
    for (const auto& [k, v] : by_type_and_misleader) by_tm[k] = group_to_json(v);
    j["by_type_and_misleader"] = std::move(by_tm);
    if (attacker) {
        json a = json::object();
        json per = json::object();
        for (const auto& [k, v] : attacker->per_label_f1) per[chartattack::to_string(k)] = v;
        a["per_label_f1"] = std::move(per);
        a["micro_f1"] = attacker->micro_f1;
        a["macro_f1"] = attacker->macro_f1;
        j["attacker"] = std::move(a);
    }
    return j;
}

std::string EvaluationReport::to_markdown() const {
    std::ostringstream md;
    md << "# Evaluation report\n\n";
    md << "reader: `" << reader_endpoint << "`  \n";
    md << "pairs answered: " << answered << " (unanswered: " << unanswered << ")\n\n";
    md << "| group | n | acc clean | acc misleading | DR (orig. correct) | DR (orig. incorrect) |\n";
    md << "|---|---|---|---|---|---|\n";
    auto row = [&](const std::string& name, const EvalGroupStats& s) {
        md << "| " << name << " | " << s.n << " | " << pct(s.acc_clean) << " | "
           << pct(s.acc_misleading) << " | "
           << (s.dr_originally_correct ? pct(*s.dr_originally_correct) : std::string("-"))
           << " | "
           << (s.dr_originally_incorrect ? pct(*s.dr_originally_incorrect) : std::string("-"))
           << " |\n";
    };
    row("overall", overall);
    for (const auto& [k, v] : by_misleader) row(k, v);
    for (const auto& [k, v] : by_type_and_misleader) row(k, v);
    if (attacker) {
        md << "\n## Attacker (multi-label)\n\n";
        md << "micro F1: " << util::format_number(attacker->micro_f1)
           << "  \nmacro F1: " << util::format_number(attacker->macro_f1) << "\n\n";
        md << "| technique | F1 |\n|---|---|\n";
        for (const auto& [k, v] : attacker->per_label_f1)
            md << "| " << chartattack::to_string(k) << " | " << util::format_number(v) << " |\n";
    }
    return md.str();
}

EvaluationReport run_paired_eval(const std::vector<AttackVizRecord>& corpus,
                                 llm::ChatClient& reader, const EvalConfig& cfg) {
    struct Task {
        const AttackVizRecord* record;
        std::size_t app_index;
    };
    std::vector<Task> tasks;
    for (const AttackVizRecord& r : corpus)
        for (std::size_t i = 0; i < r.applications.size(); ++i) tasks.push_back({&r, i});

    ResponseCache cache(cfg.cache_dir);
    std::vector<PairResult> results(tasks.size());
    std::string endpoint_id = reader.endpoint().url;

    util::parallel_for(tasks.size(), cfg.jobs, [&](std::size_t ti) {
        const Task& task = tasks[ti];
        const AttackVizRecord& r = *task.record;
        const MisleaderApplication& app = r.applications[task.app_index];
        PairResult& out = results[ti];
        out.chart_type = chartattack::to_string(r.annotation.chart_type);
        out.misleader = chartattack::to_string(app.kind);

        ChartAnnotation attacked = apply_patch(r.annotation, app.patch);
        std::string clean_png = render::render_png(r.annotation, cfg.render);
        std::string attacked_png = render::render_png(attacked, cfg.render);
        std::string prompt = llm::reader_prompt(r.question);

        auto query = [&](const std::string& variant, const std::string& png) {
            std::string key = ResponseCache::key(r.id, task.app_index, variant, endpoint_id, prompt);
            if (auto hit = cache.get(key)) return *hit;
            std::string answer = llm::ask_reader(png, r.question, reader);
            cache.put(key, answer);
            return answer;
        };

        std::string clean_text, attacked_text;
        try {
            clean_text = query("clean", clean_png);
            attacked_text = query("misleading", attacked_png);
        } catch (const EndpointError&) {
            if (cfg.strict) throw;
            out.answered = false;  // skipped instance, reported via coverage
            return;
        }
        out.answered = true;

        eval::Answer clean_pred = eval::Answer::from_text(clean_text);
        eval::Answer attacked_pred = eval::Answer::from_text(attacked_text);
        out.clean_correct = eval::relaxed_match(clean_pred, r.correct_answer, cfg.tol);
        out.attacked_correct = eval::relaxed_match(attacked_pred, r.correct_answer, cfg.tol);
        if (app.misleading_answer) {
            out.has_misleading_answer = true;
            eval::Answer mislead = eval::Answer::from_json(*app.misleading_answer);
            out.switched = eval::relaxed_match(attacked_pred, mislead, cfg.tol);
        }
    });

    EvaluationReport report;
    report.reader_endpoint = endpoint_id;
    report.config = json{{"tol", cfg.tol},
                         {"jobs", cfg.jobs},
                         {"strict", cfg.strict},
                         {"cache_dir", cfg.cache_dir},
                         {"render", render::render_config_to_json(cfg.render)}};

    GroupAccumulator overall;
    std::map<std::string, GroupAccumulator> by_misleader;
    std::map<std::string, GroupAccumulator> by_type_misleader;
    for (const PairResult& r : results) {
        if (!r.answered) {
            ++report.unanswered;
            continue;
        }
        ++report.answered;
        overall.add(r);
        by_misleader[r.misleader].add(r);
        by_type_misleader[r.chart_type + "/" + r.misleader].add(r);
    }
    report.overall = overall.stats();
    for (const auto& [k, acc] : by_misleader) report.by_misleader[k] = acc.stats();
    for (const auto& [k, acc] : by_type_misleader) report.by_type_and_misleader[k] = acc.stats();
    return report;
}

eval::MultilabelF1 attacker_f1(const std::vector<AttackVizRecord>& predicted,
                               const std::vector<AttackVizRecord>& gold) {
    std::map<std::string, std::set<MisleaderKind>> pred_sets;
    for (const AttackVizRecord& r : predicted) {
        auto& s = pred_sets[r.id];
        for (const MisleaderApplication& app : r.applications) s.insert(app.kind);
    }
    std::vector<std::set<MisleaderKind>> pred, gold_sets;
    for (const AttackVizRecord& r : gold) {
        std::set<MisleaderKind> g;
        for (const MisleaderApplication& app : r.applications) g.insert(app.kind);
        gold_sets.push_back(std::move(g));
        auto it = pred_sets.find(r.id);
        pred.push_back(it == pred_sets.end() ? std::set<MisleaderKind>{} : it->second);
    }
    return eval::multilabel_f1(pred, gold_sets);
}

// --- filtering & assembly --------------------------------------------------------------

json decision_to_json(const RecordedDecision& d) {
    json j = json::object();
    j["record_id"] = d.record_id;
    j["app_index"] = d.app_index;
    j["keep"] = d.decision.keep;
    json reasons = json::array();
    for (const std::string& r : d.decision.reasons) reasons.push_back(r);
    j["reasons"] = std::move(reasons);
    j["canonical_misleading_answer"] = d.decision.canonical_misleading_answer
                                           ? d.decision.canonical_misleading_answer->to_json()
                                           : json(nullptr);
    return j;
}

RecordedDecision decision_from_json(const json& j) {
    RecordedDecision d;
    d.record_id = j.at("record_id").get<std::string>();
    d.app_index = j.at("app_index").get<std::size_t>();
    d.decision.keep = j.at("keep").get<bool>();
    if (j.contains("reasons"))
        for (const auto& r : j["reasons"]) d.decision.reasons.push_back(r.get<std::string>());
    if (j.contains("canonical_misleading_answer") && !j["canonical_misleading_answer"].is_null())
        d.decision.canonical_misleading_answer =
            eval::Answer::from_json(j["canonical_misleading_answer"]);
    return d;
}

std::vector<AttackVizRecord> assemble_corpus(const std::vector<AttackVizRecord>& records,
                                             const std::vector<RecordedDecision>& decisions) {
    std::map<std::pair<std::string, std::size_t>, const RecordedDecision*> lookup;
    for (const RecordedDecision& d : decisions) lookup[{d.record_id, d.app_index}] = &d;

    std::vector<AttackVizRecord> out;
    for (const AttackVizRecord& r : records) {
        AttackVizRecord kept = r;
        kept.applications.clear();
        for (std::size_t i = 0; i < r.applications.size(); ++i) {
            auto it = lookup.find({r.id, i});
            if (it == lookup.end())
                throw Error("", "no filter decision for record " + r.id + " application " +
                                    std::to_string(i));
            if (!it->second->decision.keep) continue;
            MisleaderApplication app = r.applications[i];
            if (it->second->decision.canonical_misleading_answer)
                app.misleading_answer = it->second->decision.canonical_misleading_answer->to_json();
            if (!app.misleading_answer)
                throw Error("", "keep decision without a canonical answer for record " + r.id);
            eval::Answer canonical = eval::Answer::from_json(*app.misleading_answer);
            if (eval::relaxed_match(canonical, r.correct_answer, 0.05))
                throw Error("", "canonical misleading answer equals the correct answer for record " +
                                    r.id);
            kept.applications.push_back(std::move(app));
        }
        if (!kept.applications.empty()) out.push_back(std::move(kept));
    }
    return out;
}

std::vector<StatsRow> corpus_stats(const std::vector<AttackVizRecord>& records) {
    std::map<std::pair<std::string, std::string>, StatsRow> rows;
    for (const AttackVizRecord& r : records) {
        std::string type = chartattack::to_string(r.annotation.chart_type);
        auto key = std::make_pair(r.split, type);
        StatsRow& row = rows[key];
        row.split = r.split;
        row.chart_type = r.annotation.chart_type;
        ++row.questions;
        for (const MisleaderApplication& app : r.applications) ++row.per_misleader[app.kind];
    }
    std::vector<StatsRow> out;
    for (auto& [key, row] : rows) out.push_back(std::move(row));
    return out;
}

std::string stats_to_markdown(const std::vector<StatsRow>& rows) {
    std::ostringstream md;
    md << "| split | chart type | #Q";
    for (MisleaderKind k : kAllMisleaders) md << " | " << chartattack::to_string(k);
    md << " |\n|---|---|---";
    for (std::size_t i = 0; i < 8; ++i) md << "|---";
    md << "|\n";
    for (const StatsRow& row : rows) {
        md << "| " << (row.split.empty() ? "-" : row.split) << " | "
           << chartattack::to_string(row.chart_type) << " | " << row.questions;
        for (MisleaderKind k : kAllMisleaders) {
            auto it = row.per_misleader.find(k);
            if (!type_compatible(row.chart_type, k))
                md << " | -";
            else
                md << " | " << (it == row.per_misleader.end() ? 0 : it->second);
        }
        md << " |\n";
    }
    return md.str();
}

json stats_to_json(const std::vector<StatsRow>& rows) {
    json out = json::array();
    for (const StatsRow& row : rows) {
        json j = json::object();
        j["split"] = row.split;
        j["chart_type"] = chartattack::to_string(row.chart_type);
        j["questions"] = row.questions;
        json per = json::object();
        for (const auto& [k, count] : row.per_misleader) per[chartattack::to_string(k)] = count;
        j["applications"] = std::move(per);
        out.push_back(std::move(j));
    }
    return out;
}

}  // namespace chartattack::pipeline
