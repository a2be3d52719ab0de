#include "chartattack/bm25.hpp"

#include <algorithm>
#include <cmath>

#include "chartattack/util.hpp"

namespace chartattack::retrieval {

std::vector<std::string> Bm25Index::tokenize(const std::string& text) {
    return util::split_whitespace(util::to_lower(text));
}

Bm25Index::Bm25Index(std::vector<RetrievalEntry> entries)
    : Bm25Index(std::move(entries), Params{}) {}

Bm25Index::Bm25Index(std::vector<RetrievalEntry> entries, Params params)
    : entries_(std::move(entries)), params_(params) {
    std::unordered_map<std::string, int> doc_freq;
    std::size_t total_len = 0;
    for (const RetrievalEntry& e : entries_) {
        std::vector<std::string> tokens = tokenize(e.text);
        doc_len_.push_back(tokens.size());
        total_len += tokens.size();
        std::unordered_map<std::string, int> tf;
        for (const std::string& t : tokens) ++tf[t];
        for (const auto& [term, f] : tf) ++doc_freq[term];
        term_freq_.push_back(std::move(tf));
    }
    avgdl_ = entries_.empty() ? 0.0 : static_cast<double>(total_len) / entries_.size();

    double idf_sum = 0;
    std::vector<std::string> negative;
    double n = static_cast<double>(entries_.size());
    for (const auto& [term, df] : doc_freq) {
        double idf = std::log(n - df + 0.5) - std::log(df + 0.5);
        idf_[term] = idf;
        idf_sum += idf;
        if (idf < 0) negative.push_back(term);
    }
    if (!idf_.empty()) {
        double floor = params_.epsilon * (idf_sum / static_cast<double>(idf_.size()));
        for (const std::string& term : negative) idf_[term] = floor;
    }
}

double Bm25Index::score(const std::string& query, std::size_t doc) const {
    double s = 0;
    double dl = static_cast<double>(doc_len_[doc]);
    for (const std::string& term : tokenize(query)) {
        auto idf_it = idf_.find(term);
        if (idf_it == idf_.end()) continue;
        auto tf_it = term_freq_[doc].find(term);
        if (tf_it == term_freq_[doc].end()) continue;
        double f = tf_it->second;
        s += idf_it->second * (f * (params_.k1 + 1)) /
             (f + params_.k1 * (1 - params_.b + params_.b * dl / avgdl_));
    }
    return s;
}

std::vector<ScoredEntry> Bm25Index::query(const std::string& q, std::size_t k) const {
    return query(q, k, "");
}

std::vector<ScoredEntry> Bm25Index::query(const std::string& q, std::size_t k,
                                          const std::string& exclude_id) const {
    std::vector<ScoredEntry> scored;
    scored.reserve(entries_.size());
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (!exclude_id.empty() && entries_[i].id == exclude_id) continue;
        scored.push_back({&entries_[i], score(q, i)});
    }
    std::stable_sort(scored.begin(), scored.end(), [](const ScoredEntry& a, const ScoredEntry& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.entry->id < b.entry->id;
    });
    if (scored.size() > k) scored.resize(k);
    return scored;
}

}  // namespace chartattack::retrieval
