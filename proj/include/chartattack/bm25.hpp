#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "chartattack/retrieval.hpp"

namespace chartattack::retrieval {

// Okapi BM25 over whitespace-tokenized lowercase text. Negative IDF
// terms (document frequency above half the corpus) are floored at
// epsilon * average IDF, which keeps scores usable on tiny corpora.
class Bm25Index {
public:
    struct Params {
        double k1 = 1.5;
        double b = 0.75;
        double epsilon = 0.25;
    };

    explicit Bm25Index(std::vector<RetrievalEntry> entries);
    Bm25Index(std::vector<RetrievalEntry> entries, Params params);

    const std::vector<RetrievalEntry>& entries() const { return entries_; }

    double score(const std::string& query, std::size_t doc) const;

    // top-k by score, ties broken by ascending id. k beyond the corpus
    // size returns every document.
    std::vector<ScoredEntry> query(const std::string& query, std::size_t k) const;
    std::vector<ScoredEntry> query(const std::string& query, std::size_t k,
                                   const std::string& exclude_id) const;

    static std::vector<std::string> tokenize(const std::string& text);

private:
    std::vector<RetrievalEntry> entries_;
    Params params_;
    double avgdl_ = 0;
    std::vector<std::size_t> doc_len_;
    std::vector<std::unordered_map<std::string, int>> term_freq_;
    std::unordered_map<std::string, double> idf_;
};

}  // namespace chartattack::retrieval
