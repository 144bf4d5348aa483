#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "emojivec/emoji.hpp"
#include "emojivec/error.hpp"
#include "emojivec/sgns.hpp"
#include "emojivec/vocab.hpp"

namespace emojivec {

enum class KeyKind : uint8_t { word, emoji };

struct QueryFilter {
    enum class Kind { any, emoji_only, word_only };
    Kind kind = Kind::any;
    uint64_t min_doc_count = 0; // 0 = off
    std::unordered_set<std::string> exclude;
};

struct SimilarityHit {
    std::string key;
    double similarity;
};

// Immutable keyed vector store: ordered keys, one row per key, optional
// per-key document frequencies. All queries are exact exhaustive scans.
class KeyedVectors {
  public:
    KeyedVectors() = default;

    KeyedVectors(std::vector<std::string> keys, std::vector<float> matrix, size_t dim,
                 std::vector<uint64_t> doc_counts = {})
        : keys_(std::move(keys)), data_(std::move(matrix)), dim_(dim),
          doc_counts_(std::move(doc_counts)) {
        if (dim_ == 0) fail(errc::config, "dim must be >= 1");
        if (data_.size() != keys_.size() * dim_) fail(errc::config, "matrix shape mismatch");
        if (doc_counts_.empty()) doc_counts_.assign(keys_.size(), 0);
        if (doc_counts_.size() != keys_.size()) fail(errc::config, "doc count size mismatch");
        finish_build();
    }

    static KeyedVectors from_training(const Vocab& vocab, const EmbeddingMatrix& m) {
        std::vector<std::string> keys;
        std::vector<uint64_t> dfs;
        keys.reserve(vocab.size());
        dfs.reserve(vocab.size());
        for (const auto& e : vocab.entries) {
            keys.push_back(e.key);
            dfs.push_back(e.doc_count);
        }
        return KeyedVectors(std::move(keys), m.input, size_t(m.dim), std::move(dfs));
    }

    size_t size() const { return keys_.size(); }
    size_t dim() const { return dim_; }
    const std::vector<std::string>& keys() const { return keys_; }

    bool has(std::string_view key) const { return resolve(key) >= 0; }

    // Exact key hit first; emoji keys also resolve through normalization so
    // queries with variation selectors or skin tones still land.
    int64_t resolve(std::string_view key) const {
        auto it = index_.find(std::string(key));
        if (it != index_.end()) return int64_t(it->second);
        if (is_emoji_key_string(key)) {
            try {
                auto norm = normalize_emoji_utf8(key).utf8();
                auto it2 = norm_index_.find(norm);
                if (it2 != norm_index_.end()) return int64_t(it2->second);
            } catch (const error&) {
            }
        }
        return -1;
    }

    size_t require(std::string_view key) const {
        int64_t i = resolve(key);
        if (i < 0) fail(errc::not_found, "key not in store: " + std::string(key));
        return size_t(i);
    }

    std::span<const float> row(size_t i) const { return {data_.data() + i * dim_, dim_}; }
    std::span<const float> vector_of(std::string_view key) const { return row(require(key)); }
    uint64_t doc_count(size_t i) const { return doc_counts_[i]; }
    KeyKind kind(size_t i) const { return kinds_[i]; }

    double cosine(std::string_view a, std::string_view b) const {
        size_t ia = require(a), ib = require(b);
        if (norms_[ia] == 0.0 || norms_[ib] == 0.0)
            fail(errc::degenerate, "cosine undefined for zero vector");
        auto ra = row(ia);
        auto rb = row(ib);
        double dot = 0.0;
        for (size_t j = 0; j < dim_; ++j) dot += double(ra[j]) * double(rb[j]);
        return dot / (norms_[ia] * norms_[ib]);
    }

    // Top-k cosine neighbors passing the filter, query excluded, descending
    // similarity with ties broken by store order.
    std::vector<SimilarityHit> top_k_similar(std::string_view query, size_t k,
                                             const QueryFilter& filter = {}) const {
        size_t qi = require(query);
        std::vector<float> qv(row(qi).begin(), row(qi).end());
        return top_k_by_vector(std::span<const float>(qv), k, filter, int64_t(qi));
    }

    // Same ranking for a free query vector (no store row excluded).
    std::vector<SimilarityHit> top_k_by_vector(std::span<const float> query, size_t k,
                                               const QueryFilter& filter = {},
                                               int64_t exclude_row = -1) const {
        if (query.size() != dim_) fail(errc::config, "query vector dim mismatch");
        double qnorm = 0.0;
        for (float x : query) qnorm += double(x) * double(x);
        qnorm = std::sqrt(qnorm);
        if (qnorm == 0.0) fail(errc::degenerate, "cosine undefined for zero vector");

        std::vector<std::pair<double, size_t>> hits;
        for (size_t i = 0; i < size(); ++i) {
            if (int64_t(i) == exclude_row || norms_[i] == 0.0) continue;
            if (!passes(i, filter)) continue;
            auto r = row(i);
            double dot = 0.0;
            for (size_t j = 0; j < dim_; ++j) dot += double(query[j]) * double(r[j]);
            hits.emplace_back(dot / (qnorm * norms_[i]), i);
        }
        auto better = [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        };
        if (hits.size() > k) {
            std::partial_sort(hits.begin(), hits.begin() + int64_t(k), hits.end(), better);
            hits.resize(k);
        } else {
            std::sort(hits.begin(), hits.end(), better);
        }
        std::vector<SimilarityHit> out;
        out.reserve(hits.size());
        for (auto& [sim, i] : hits) out.push_back({keys_[i], sim});
        return out;
    }

    void save_text(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) fail(errc::io, "cannot write " + path);
        out << size() << ' ' << dim_ << '\n';
        char buf[64];
        for (size_t i = 0; i < size(); ++i) {
            out << keys_[i];
            auto r = row(i);
            for (size_t j = 0; j < dim_; ++j) {
                auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), r[j]);
                out << ' ';
                out.write(buf, end - buf);
            }
            out << '\n';
        }
        bool any_df = false;
        for (uint64_t c : doc_counts_)
            if (c) any_df = true;
        if (any_df) {
            std::ofstream df(path + ".df", std::ios::binary);
            if (!df) fail(errc::io, "cannot write " + path + ".df");
            for (size_t i = 0; i < size(); ++i) df << keys_[i] << ' ' << doc_counts_[i] << '\n';
        }
    }

    // word2vec text format: header `V dim`, then `key v1 .. vdim` per line.
    // Lenient about repeated spaces and CR line ends; strict about arity.
    static KeyedVectors load_text(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) fail(errc::not_found, "cannot open " + path);
        std::string line;
        size_t line_no = 0;
        auto next_line = [&]() -> bool {
            while (std::getline(in, line)) {
                ++line_no;
                if (!line.empty() && line.back() == '\r') line.pop_back();
                if (!line.empty()) return true;
            }
            return false;
        };
        if (!next_line()) fail(errc::format, path + ": empty file");

        size_t v = 0, dim = 0;
        {
            const char* p = line.data();
            const char* end = p + line.size();
            auto r1 = std::from_chars(p, end, v);
            if (r1.ec != std::errc() || r1.ptr == end || *r1.ptr != ' ')
                fail(errc::format, path + ":1: bad header");
            auto r2 = std::from_chars(r1.ptr + 1, end, dim);
            if (r2.ec != std::errc() || dim == 0) fail(errc::format, path + ":1: bad header");
        }

        std::vector<std::string> keys;
        std::vector<float> data;
        keys.reserve(v);
        data.reserve(v * dim);
        std::unordered_set<std::string> seen;
        for (size_t r = 0; r < v; ++r) {
            if (!next_line())
                fail(errc::format, path + ": expected " + std::to_string(v) + " rows, got " +
                                       std::to_string(r));
            std::string_view sv(line);
            size_t sp = sv.find(' ');
            if (sp == std::string_view::npos || sp == 0)
                fail(errc::format, path + ":" + std::to_string(line_no) + ": missing vector values");
            std::string key(sv.substr(0, sp));
            if (!seen.insert(key).second)
                fail(errc::format, path + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
            size_t got = 0;
            size_t p = sp;
            const char* base = sv.data();
            while (p < sv.size()) {
                while (p < sv.size() && (sv[p] == ' ' || sv[p] == '\t')) ++p;
                if (p >= sv.size()) break;
                float val = 0.0f;
                auto res = std::from_chars(base + p, base + sv.size(), val);
                if (res.ec != std::errc())
                    fail(errc::format, path + ":" + std::to_string(line_no) + ": bad float");
                p = size_t(res.ptr - base);
                ++got;
                if (got > dim)
                    fail(errc::format,
                         path + ":" + std::to_string(line_no) + ": row has more than " +
                             std::to_string(dim) + " values");
                data.push_back(val);
            }
            if (got != dim)
                fail(errc::format, path + ":" + std::to_string(line_no) + ": expected " +
                                       std::to_string(dim) + " values, got " + std::to_string(got));
            keys.push_back(std::move(key));
        }

        std::vector<uint64_t> dfs(keys.size(), 0);
        std::ifstream df(path + ".df", std::ios::binary);
        if (df) {
            std::unordered_map<std::string, size_t> idx;
            for (size_t i = 0; i < keys.size(); ++i) idx.emplace(keys[i], i);
            std::string dline;
            while (std::getline(df, dline)) {
                if (!dline.empty() && dline.back() == '\r') dline.pop_back();
                size_t sp = dline.rfind(' ');
                if (sp == std::string::npos) continue;
                auto it = idx.find(dline.substr(0, sp));
                if (it == idx.end()) continue;
                uint64_t c = 0;
                std::from_chars(dline.data() + sp + 1, dline.data() + dline.size(), c);
                dfs[it->second] = c;
            }
        }
        return KeyedVectors(std::move(keys), std::move(data), dim, std::move(dfs));
    }

  private:
    void finish_build() {
        index_.reserve(keys_.size());
        kinds_.resize(keys_.size());
        norms_.resize(keys_.size());
        for (size_t i = 0; i < keys_.size(); ++i) {
            if (!index_.emplace(keys_[i], i).second)
                fail(errc::format, "duplicate key '" + keys_[i] + "'");
            kinds_[i] = is_emoji_key_string(keys_[i]) ? KeyKind::emoji : KeyKind::word;
            double n = 0.0;
            for (float x : row(i)) {
                if (!std::isfinite(x)) fail(errc::format, "non-finite value for key '" + keys_[i] + "'");
                n += double(x) * double(x);
            }
            norms_[i] = std::sqrt(n);
            if (kinds_[i] == KeyKind::emoji) {
                try {
                    norm_index_.try_emplace(normalize_emoji_utf8(keys_[i]).utf8(), i);
                } catch (const error&) {
                }
            }
        }
    }

    bool passes(size_t i, const QueryFilter& f) const {
        if (f.kind == QueryFilter::Kind::emoji_only && kinds_[i] != KeyKind::emoji) return false;
        if (f.kind == QueryFilter::Kind::word_only && kinds_[i] != KeyKind::word) return false;
        if (f.min_doc_count > 0 && doc_counts_[i] < f.min_doc_count) return false;
        if (!f.exclude.empty() && f.exclude.contains(keys_[i])) return false;
        return true;
    }

    std::vector<std::string> keys_;
    std::vector<float> data_;
    size_t dim_ = 0;
    std::vector<uint64_t> doc_counts_;
    std::unordered_map<std::string, size_t> index_;
    std::unordered_map<std::string, size_t> norm_index_;
    std::vector<KeyKind> kinds_;
    std::vector<double> norms_;
};

} // namespace emojivec
