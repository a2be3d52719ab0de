#pragma once

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "chartattack/annotation.hpp"
#include "chartattack/misleader.hpp"
#include "chartattack/rng.hpp"

namespace chartattack::retrieval {

struct RetrievalEntry {
    std::string id;
    ChartType chart_type = ChartType::v_bar;
    std::string text;  // encoded question + simplified annotation
    std::set<MisleaderKind> misleader_set;
    std::optional<std::vector<float>> vector;

    bool operator==(const RetrievalEntry&) const = default;
};

struct AnchorPositivePair {
    RetrievalEntry anchor;
    RetrievalEntry positive;
};

enum class DownsampleMode { anchor, anchor_positive };

struct DownsampleStats {
    DownsampleMode mode = DownsampleMode::anchor;
    double median = 0;
    double mean = 0;
    double threshold = 0;  // (median / mean) * median
    std::size_t cap = 0;   // threshold rounded half-up
    std::size_t removed = 0;
};

// question + minimally simplified annotation, with JSON punctuation
// stripped and whitespace collapsed.
std::string encode_for_retrieval(const std::string& question, const ChartAnnotation& a);

// All ordered pairs (i, j), i != j, of same-chart-type entries whose
// misleader sets match exactly.
std::vector<AnchorPositivePair> build_pairs(const std::vector<RetrievalEntry>& corpus);

// Caps per-group pair frequencies at round((median/mean) * median), where
// groups collapse identical anchor texts (anchor mode) or identical
// anchor+positive texts. Survivors of an over-cap group are drawn
// uniformly at random; everything else is untouched.
std::pair<std::vector<AnchorPositivePair>, DownsampleStats> downsample(
    const std::vector<AnchorPositivePair>& pairs, DownsampleMode mode, uint64_t seed);

struct ScoredEntry {
    const RetrievalEntry* entry = nullptr;
    double score = 0;
};

// Dense cosine index over fixed-dimension vectors.
class VectorIndex {
public:
    explicit VectorIndex(std::vector<RetrievalEntry> entries);

    const std::vector<RetrievalEntry>& entries() const { return entries_; }
    std::size_t dimension() const { return dimension_; }

    // top-k by cosine similarity, ties broken by ascending id
    std::vector<ScoredEntry> query(const std::vector<float>& vec, std::size_t k) const;

    // exclude_id removes the query's own entry from the candidate pool
    std::vector<ScoredEntry> query(const std::vector<float>& vec, std::size_t k,
                                   const std::string& exclude_id) const;

private:
    std::vector<RetrievalEntry> entries_;
    std::size_t dimension_ = 0;
};

enum class AccuracyMode { hit, precision };

// Fraction of queries with >=1 exact misleader-set match in the top-k
// (hit mode), or the mean fraction of matching entries (precision mode).
// retrieve(query, k) must exclude the query itself from its pool.
double accuracy_at_k(
    const std::vector<RetrievalEntry>& queries,
    const std::function<std::vector<ScoredEntry>(const RetrievalEntry&, std::size_t)>& retrieve,
    std::size_t k = 5, AccuracyMode mode = AccuracyMode::hit);

// --- persistence -------------------------------------------------------------

// Directory layout: entries.jsonl plus vectors.bin (little-endian uint32
// dimension header, then row-major float32).
void save_index(const std::string& dir, const std::vector<RetrievalEntry>& entries);
std::vector<RetrievalEntry> load_index(const std::string& dir);

json entry_to_json(const RetrievalEntry& e);
RetrievalEntry entry_from_json(const json& j);

// Pair export: one {"anchor_text", "positive_text"} object per line.
std::string pairs_to_jsonl(const std::vector<AnchorPositivePair>& pairs);

// --- embedding provider -------------------------------------------------------

// HTTP contract: POST {"texts": [...]} -> {"vectors": [[...], ...]}.
class EmbedProvider {
public:
    EmbedProvider(std::string url, std::string api_key, std::string cache_dir = "",
                  std::size_t batch_size = 32);

    // Returns one vector per text, consulting the text-hash cache first.
    std::vector<std::vector<float>> embed(const std::vector<std::string>& texts);

private:
    std::string url_;
    std::string api_key_;
    std::string cache_dir_;
    std::size_t batch_size_;
};

}  // namespace chartattack::retrieval
