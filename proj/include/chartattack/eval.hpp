#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "chartattack/annotation.hpp"
#include "chartattack/misleader.hpp"

namespace chartattack::eval {

enum class AnswerKind { numeric, textual };

// A QA answer: either a number or a normalized string (trimmed,
// lowercased, inner whitespace collapsed).
struct Answer {
    AnswerKind kind = AnswerKind::textual;
    double numeric_value = 0;
    std::string text_value;

    static Answer number(double v);
    static Answer text(std::string_view s);
    // Numeric when the whole string parses as a number, textual otherwise.
    static Answer from_text(std::string_view s);
    static Answer from_json(const json& j);  // native scalar (number or string)

    json to_json() const;
    std::string display() const;

    bool operator==(const Answer&) const = default;
};

// Relaxed match: numeric within tol * |gold| (exact when gold == 0),
// textual requires normalized equality; mixed kinds attempt numeric
// coercion of the textual side.
bool relaxed_match(const Answer& pred, const Answer& gold, double tol);

double relaxed_accuracy(const std::vector<Answer>& preds, const std::vector<Answer>& golds,
                        double tol);

struct PairedOutcome {
    Answer gold;
    Answer misleading_answer;
    Answer clean_pred;
    Answer attacked_pred;
};

struct DeceptionRates {
    // absent when the respective clean partition is empty
    std::optional<double> dr_correct;
    std::optional<double> dr_incorrect;
    std::size_t n_clean_correct = 0;
    std::size_t n_clean_incorrect = 0;
};

// Partitions by clean-chart correctness and measures exact switches to
// the attacker's misleading answer in each partition.
DeceptionRates deception_rates(const std::vector<PairedOutcome>& records, double tol);

struct MultilabelF1 {
    std::map<MisleaderKind, double> per_label_f1;
    double micro_f1 = 0;
    double macro_f1 = 0;
};

// Binary per-label precision/recall/F1; micro over global TP/FP/FN;
// macro averaged over labels with any gold or predicted support.
MultilabelF1 multilabel_f1(const std::vector<std::set<MisleaderKind>>& predicted,
                           const std::vector<std::set<MisleaderKind>>& gold);

struct ModelResponsePair {
    std::string model;
    Answer clean_pred;
    Answer attacked_pred;
};

struct FilterDecision {
    bool keep = false;
    std::vector<std::string> reasons;
    std::optional<Answer> canonical_misleading_answer;
};

struct FilterConfig {
    double tol = 0.05;
    double numeric_sigma_limit = 0.5;  // population standard deviation
    std::size_t min_responders = 3;
};

// Keeps an instance when a strict majority of readers is correct on the
// clean chart, a strict majority is wrong on the attacked chart, and the
// wrong attacked answers are consistent (sigma < 0.5 for numbers, a
// strict-majority identical string for text). The canonical misleading
// answer is the mean of the wrong numeric answers or the majority string.
FilterDecision consistency_filter(const std::vector<ModelResponsePair>& responses,
                                  const Answer& gold, const FilterConfig& cfg = {});

}  // namespace chartattack::eval
