#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "emojivec/error.hpp"

namespace emojivec {

struct VocabEntry {
    std::string key;
    uint64_t term_count = 0;
    uint64_t doc_count = 0; // sentences containing the token
};

struct Vocab {
    std::vector<VocabEntry> entries;              // index order
    std::unordered_map<std::string, int32_t> index;
    uint64_t total_terms = 0;                     // sum of kept term counts
    uint32_t min_count = 1;

    size_t size() const { return entries.size(); }

    int32_t find(std::string_view key) const {
        auto it = index.find(std::string(key));
        return it == index.end() ? -1 : it->second;
    }

    void rebuild_index() {
        index.clear();
        index.reserve(entries.size());
        total_terms = 0;
        for (size_t i = 0; i < entries.size(); ++i) {
            index.emplace(entries[i].key, int32_t(i));
            total_terms += entries[i].term_count;
        }
    }
};

using TokenCorpus = std::vector<std::vector<std::string>>;

inline TokenCorpus read_token_corpus(std::istream& in) {
    TokenCorpus corpus;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::vector<std::string> sent;
        size_t p = 0;
        while (p < line.size()) {
            size_t q = line.find(' ', p);
            if (q == std::string::npos) q = line.size();
            if (q > p) sent.emplace_back(line.substr(p, q - p));
            p = q + 1;
        }
        if (!sent.empty()) corpus.push_back(std::move(sent));
    }
    return corpus;
}

// Indices are assigned by descending count, ties broken by key, so equal
// corpora always build the identical vocab.
inline Vocab build_vocab(const TokenCorpus& corpus, uint32_t min_count) {
    if (min_count < 1) fail(errc::config, "min_count must be >= 1");
    std::unordered_map<std::string, std::pair<uint64_t, uint64_t>> counts; // term, doc
    std::unordered_map<std::string, size_t> last_sentence;
    size_t sent_no = 0;
    for (const auto& sent : corpus) {
        ++sent_no;
        for (const auto& tok : sent) {
            auto& c = counts[tok];
            ++c.first;
            auto [it, fresh] = last_sentence.try_emplace(tok, sent_no);
            if (fresh || it->second != sent_no) {
                it->second = sent_no;
                ++c.second;
            }
        }
    }
    Vocab v;
    v.min_count = min_count;
    for (auto& [key, c] : counts)
        if (c.first >= min_count) v.entries.push_back({key, c.first, c.second});
    if (v.entries.empty()) fail(errc::degenerate, "no token meets min_count");
    std::sort(v.entries.begin(), v.entries.end(), [](const VocabEntry& a, const VocabEntry& b) {
        if (a.term_count != b.term_count) return a.term_count > b.term_count;
        return a.key < b.key;
    });
    v.rebuild_index();
    return v;
}

// Maps token sentences onto vocab indices; out-of-vocabulary tokens drop out.
inline std::vector<std::vector<int32_t>> map_corpus(const Vocab& vocab, const TokenCorpus& corpus) {
    std::vector<std::vector<int32_t>> out;
    out.reserve(corpus.size());
    for (const auto& sent : corpus) {
        std::vector<int32_t> ids;
        ids.reserve(sent.size());
        for (const auto& tok : sent) {
            int32_t i = vocab.find(tok);
            if (i >= 0) ids.push_back(i);
        }
        out.push_back(std::move(ids));
    }
    return out;
}

} // namespace emojivec
