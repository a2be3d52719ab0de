#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "chartattack/retrieval.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "chartattack/errors.hpp"
#include "chartattack/kernels.hpp"
#include "chartattack/util.hpp"

namespace chartattack::retrieval {

std::string encode_for_retrieval(const std::string& question, const ChartAnnotation& a) {
    ChartAnnotation minimal = simplify(a, SimplifyMode::minimal);
    std::string doc = annotation_to_json(minimal).dump();
    std::string stripped;
    stripped.reserve(doc.size());
    for (char c : doc) {
        switch (c) {
            case '{': case '}': case '[': case ']': case '"': case ':': case ',':
                stripped.push_back(' ');
                break;
            default:
                stripped.push_back(c);
        }
    }
    return util::collapse_whitespace(question + " " + stripped);
}

std::vector<AnchorPositivePair> build_pairs(const std::vector<RetrievalEntry>& corpus) {
    std::vector<AnchorPositivePair> out;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        for (std::size_t j = 0; j < corpus.size(); ++j) {
            if (i == j) continue;
            if (corpus[i].chart_type != corpus[j].chart_type) continue;
            if (corpus[i].misleader_set != corpus[j].misleader_set) continue;
            out.push_back({corpus[i], corpus[j]});
        }
    }
    return out;
}

std::pair<std::vector<AnchorPositivePair>, DownsampleStats> downsample(
    const std::vector<AnchorPositivePair>& pairs, DownsampleMode mode, uint64_t seed) {
    DownsampleStats stats;
    stats.mode = mode;
    if (pairs.empty()) return {{}, stats};

    auto group_key = [&](const AnchorPositivePair& p) {
        return mode == DownsampleMode::anchor ? p.anchor.text
                                              : p.anchor.text + "\x1f" + p.positive.text;
    };

    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < pairs.size(); ++i) groups[group_key(pairs[i])].push_back(i);

    std::vector<double> freqs;
    freqs.reserve(groups.size());
    for (const auto& [key, members] : groups) freqs.push_back(static_cast<double>(members.size()));
    std::sort(freqs.begin(), freqs.end());
    std::size_t n = freqs.size();
    stats.median = n % 2 == 1 ? freqs[n / 2] : (freqs[n / 2 - 1] + freqs[n / 2]) / 2.0;
    stats.mean = 0;
    for (double f : freqs) stats.mean += f;
    stats.mean /= static_cast<double>(n);
    stats.threshold = (stats.median / stats.mean) * stats.median;
    stats.cap = static_cast<std::size_t>(std::floor(stats.threshold + 0.5));  // round half-up

    std::vector<bool> keep(pairs.size(), true);
    Rng rng(seed);
    for (auto& [key, members] : groups) {
        if (members.size() <= stats.cap) continue;
        std::vector<std::size_t> order = rng.shuffled_indices(members.size());
        for (std::size_t r = stats.cap; r < order.size(); ++r) keep[members[order[r]]] = false;
    }

    std::vector<AnchorPositivePair> out;
    out.reserve(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (keep[i])
            out.push_back(pairs[i]);
        else
            ++stats.removed;
    }
    return {out, stats};
}

// --- cosine index -------------------------------------------------------------

VectorIndex::VectorIndex(std::vector<RetrievalEntry> entries) : entries_(std::move(entries)) {
    for (const RetrievalEntry& e : entries_) {
        if (!e.vector) throw IoError(e.id, "index entry without a vector");
        if (dimension_ == 0) dimension_ = e.vector->size();
        if (e.vector->size() != dimension_)
            throw IoError(e.id, "vector dimension mismatch in index");
    }
    if (dimension_ == 0 && !entries_.empty())
        throw IoError("", "index vectors must be nonempty");
}

namespace {

double cosine(const std::vector<float>& a, const std::vector<float>& b) {
    float dot = kernels::dot(a.data(), b.data(), a.size());
    float na = kernels::norm_sq(a.data(), a.size());
    float nb = kernels::norm_sq(b.data(), b.size());
    if (na <= 0 || nb <= 0) return 0.0;
    return static_cast<double>(dot) / (std::sqrt(static_cast<double>(na)) *
                                       std::sqrt(static_cast<double>(nb)));
}

}  // namespace

std::vector<ScoredEntry> VectorIndex::query(const std::vector<float>& vec, std::size_t k) const {
    return query(vec, k, "");
}

std::vector<ScoredEntry> VectorIndex::query(const std::vector<float>& vec, std::size_t k,
                                            const std::string& exclude_id) const {
    if (!entries_.empty() && vec.size() != dimension_)
        throw IoError("", "query vector dimension " + std::to_string(vec.size()) +
                              " does not match index dimension " + std::to_string(dimension_));
    std::vector<ScoredEntry> scored;
    scored.reserve(entries_.size());
    for (const RetrievalEntry& e : entries_) {
        if (!exclude_id.empty() && e.id == exclude_id) continue;
        scored.push_back({&e, cosine(vec, *e.vector)});
    }
    std::stable_sort(scored.begin(), scored.end(), [](const ScoredEntry& a, const ScoredEntry& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.entry->id < b.entry->id;
    });
    if (scored.size() > k) scored.resize(k);
    return scored;
}

double accuracy_at_k(
    const std::vector<RetrievalEntry>& queries,
    const std::function<std::vector<ScoredEntry>(const RetrievalEntry&, std::size_t)>& retrieve,
    std::size_t k, AccuracyMode mode) {
    if (queries.empty()) return 0.0;
    double total = 0;
    for (const RetrievalEntry& q : queries) {
        std::vector<ScoredEntry> top = retrieve(q, k);
        std::size_t matches = 0;
        for (const ScoredEntry& s : top)
            if (s.entry->misleader_set == q.misleader_set) ++matches;
        if (mode == AccuracyMode::hit)
            total += matches > 0 ? 1.0 : 0.0;
        else
            total += top.empty() ? 0.0 : static_cast<double>(matches) / static_cast<double>(top.size());
    }
    return total / static_cast<double>(queries.size());
}

// --- persistence -------------------------------------------------------------

json entry_to_json(const RetrievalEntry& e) {
    json j = json::object();
    j["id"] = e.id;
    j["chart_type"] = chartattack::to_string(e.chart_type);
    j["text"] = e.text;
    json set = json::array();
    for (MisleaderKind k : e.misleader_set) set.push_back(chartattack::to_string(k));
    j["misleaders"] = std::move(set);
    return j;
}

RetrievalEntry entry_from_json(const json& j) {
    RetrievalEntry e;
    e.id = j.at("id").get<std::string>();
    e.chart_type = chart_type_from_string(j.at("chart_type").get<std::string>());
    e.text = j.at("text").get<std::string>();
    if (j.contains("misleaders"))
        for (const auto& name : j["misleaders"])
            e.misleader_set.insert(misleader_from_string(name.get<std::string>()));
    return e;
}

void save_index(const std::string& dir, const std::vector<RetrievalEntry>& entries) {
    std::filesystem::create_directories(dir);
    std::ostringstream lines;
    for (const RetrievalEntry& e : entries) lines << entry_to_json(e).dump() << "\n";
    util::write_file(dir + "/entries.jsonl", lines.str());

    bool any_vectors = !entries.empty() && entries.front().vector.has_value();
    if (!any_vectors) return;
    uint32_t dim = static_cast<uint32_t>(entries.front().vector->size());
    std::string blob;
    blob.resize(4 + static_cast<std::size_t>(entries.size()) * dim * 4);
    std::memcpy(blob.data(), &dim, 4);
    std::size_t off = 4;
    for (const RetrievalEntry& e : entries) {
        if (!e.vector || e.vector->size() != dim)
            throw IoError(e.id, "inconsistent vectors while saving index");
        std::memcpy(blob.data() + off, e.vector->data(), dim * 4);
        off += dim * 4;
    }
    util::write_file(dir + "/vectors.bin", blob);
}

std::vector<RetrievalEntry> load_index(const std::string& dir) {
    std::string lines = util::read_file(dir + "/entries.jsonl");
    std::vector<RetrievalEntry> entries;
    std::istringstream in(lines);
    std::string line;
    while (std::getline(in, line)) {
        if (util::trim(line).empty()) continue;
        entries.push_back(entry_from_json(json::parse(line)));
    }
    std::string vec_path = dir + "/vectors.bin";
    if (std::filesystem::exists(vec_path)) {
        std::string blob = util::read_file(vec_path);
        if (blob.size() < 4) throw IoError(vec_path, "truncated vector file");
        uint32_t dim = 0;
        std::memcpy(&dim, blob.data(), 4);
        std::size_t expected = 4 + static_cast<std::size_t>(entries.size()) * dim * 4;
        if (blob.size() != expected)
            throw IoError(vec_path, "vector file size does not match entry count");
        std::size_t off = 4;
        for (RetrievalEntry& e : entries) {
            std::vector<float> v(dim);
            std::memcpy(v.data(), blob.data() + off, dim * 4);
            off += dim * 4;
            e.vector = std::move(v);
        }
    }
    return entries;
}

std::string pairs_to_jsonl(const std::vector<AnchorPositivePair>& pairs) {
    std::ostringstream out;
    for (const AnchorPositivePair& p : pairs) {
        json j = json::object();
        j["anchor_text"] = p.anchor.text;
        j["positive_text"] = p.positive.text;
        out << j.dump() << "\n";
    }
    return out.str();
}

// --- embedding provider --------------------------------------------------------

namespace {

struct UrlParts {
    std::string host_port;  // scheme://host:port
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

EmbedProvider::EmbedProvider(std::string url, std::string api_key, std::string cache_dir,
                             std::size_t batch_size)
    : url_(std::move(url)),
      api_key_(std::move(api_key)),
      cache_dir_(std::move(cache_dir)),
      batch_size_(std::max<std::size_t>(batch_size, 1)) {}

std::vector<std::vector<float>> EmbedProvider::embed(const std::vector<std::string>& texts) {
    std::vector<std::vector<float>> out(texts.size());
    std::vector<std::size_t> missing;

    auto cache_path = [&](const std::string& text) {
        return cache_dir_ + "/emb_" + util::sha256_hex(text) + ".json";
    };

    if (!cache_dir_.empty()) {
        std::filesystem::create_directories(cache_dir_);
        for (std::size_t i = 0; i < texts.size(); ++i) {
            std::string path = cache_path(texts[i]);
            if (std::filesystem::exists(path)) {
                json j = json::parse(util::read_file(path));
                out[i] = j.get<std::vector<float>>();
            } else {
                missing.push_back(i);
            }
        }
    } else {
        for (std::size_t i = 0; i < texts.size(); ++i) missing.push_back(i);
    }
    if (missing.empty()) return out;

    UrlParts parts = split_url(url_);
    httplib::Client client(parts.host_port);
    client.set_read_timeout(120, 0);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    for (std::size_t start = 0; start < missing.size(); start += batch_size_) {
        std::size_t end = std::min(missing.size(), start + batch_size_);
        json request = json::object();
        json batch = json::array();
        for (std::size_t i = start; i < end; ++i) batch.push_back(texts[missing[i]]);
        request["texts"] = std::move(batch);

        auto res = client.Post(parts.path, headers, request.dump(), "application/json");
        if (!res) throw EndpointError("embedding endpoint unreachable: " + url_);
        if (res->status < 200 || res->status >= 300)
            throw EndpointError("embedding endpoint returned status " + std::to_string(res->status),
                                res->status);
        json response = json::parse(res->body);
        if (!response.contains("vectors") || !response["vectors"].is_array() ||
            response["vectors"].size() != end - start)
            throw EndpointError("embedding endpoint returned a malformed vector list");
        for (std::size_t i = start; i < end; ++i) {
            out[missing[i]] = response["vectors"][i - start].get<std::vector<float>>();
            if (!cache_dir_.empty()) {
                json j = out[missing[i]];
                util::write_file(cache_path(texts[missing[i]]), j.dump());
            }
        }
    }
    return out;
}

}  // namespace chartattack::retrieval
