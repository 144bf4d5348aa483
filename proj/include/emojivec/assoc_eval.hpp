#pragma once

#include <cmath>
#include <istream>
#include <string>
#include <unordered_set>
#include <vector>

#include "emojivec/confusion.hpp"
#include "emojivec/csv.hpp"
#include "emojivec/emoji.hpp"
#include "emojivec/error.hpp"
#include "emojivec/keyed_vectors.hpp"
#include "emojivec/rank_correlation.hpp"

namespace emojivec {

// Emoji2Emoji showcase: per query, the top-k emoji neighbors above the
// document-frequency floor.
inline std::vector<std::vector<SimilarityHit>>
emoji2emoji_table(const KeyedVectors& store, const std::vector<EmojiKey>& queries, size_t k,
                  uint64_t min_df) {
    QueryFilter f;
    f.kind = QueryFilter::Kind::emoji_only;
    f.min_doc_count = min_df;
    std::vector<std::vector<SimilarityHit>> out;
    out.reserve(queries.size());
    for (const auto& q : queries) out.push_back(store.top_k_similar(q.utf8(), k, f));
    return out;
}

// Emoji2Text: nearest words to an emoji, df-filtered.
inline std::vector<SimilarityHit> emoji2text(const KeyedVectors& store, const EmojiKey& emoji,
                                             size_t k, uint64_t min_df) {
    QueryFilter f;
    f.kind = QueryFilter::Kind::word_only;
    f.min_doc_count = min_df;
    return store.top_k_similar(emoji.utf8(), k, f);
}

enum class GroupLevel { group, subgroup };

struct GroupConfusionResult {
    ConfusionMatrix matrix;
    ConfusionMatrix::PrecisionStats precision;
    double per_emoji_accuracy = 0.0; // alternative aggregation: share of emojis whose
                                     // top-1 neighbor lands in their own group
    size_t evaluated = 0;
    size_t skipped = 0; // emojis without any neighbor passing the filter
};

// Labels in catalog order keeps matrices comparable across runs.
inline std::vector<std::string> collect_group_labels(const EmojiCatalog& catalog, GroupLevel level,
                                                     const std::vector<std::string>& needed) {
    std::vector<std::string> order;
    std::unordered_set<std::string> seen;
    auto push = [&](const std::string& l) {
        if (seen.insert(l).second) order.push_back(l);
    };
    std::unordered_set<std::string> wanted(needed.begin(), needed.end());
    for (const auto& e : catalog.entries()) {
        const std::string& l = level == GroupLevel::group ? e.group : e.subgroup;
        if (wanted.contains(l)) push(l);
    }
    for (const auto& l : needed) push(l); // anything not in the catalog (e.g. Unknown) goes last
    return order;
}

// For every emoji key in the store: find its top-1 emoji neighbor and count
// (group(query), group(neighbor)).
inline GroupConfusionResult group_confusion(const KeyedVectors& store, const EmojiCatalog& catalog,
                                            GroupLevel level, uint64_t min_df = 0) {
    std::vector<size_t> emoji_rows;
    for (size_t i = 0; i < store.size(); ++i)
        if (store.kind(i) == KeyKind::emoji) emoji_rows.push_back(i);
    if (emoji_rows.size() < 2) fail(errc::degenerate, "store has fewer than two emoji keys");

    QueryFilter f;
    f.kind = QueryFilter::Kind::emoji_only;
    f.min_doc_count = min_df;

    auto label_of = [&](const std::string& key) {
        auto [g, s] = catalog.group_of(normalize_emoji_utf8(key));
        return level == GroupLevel::group ? g : s;
    };

    std::vector<std::pair<std::string, std::string>> pairs;
    std::vector<std::string> needed;
    std::unordered_set<std::string> needed_seen;
    auto note = [&](const std::string& l) {
        if (needed_seen.insert(l).second) needed.push_back(l);
    };
    size_t skipped = 0;
    for (size_t i : emoji_rows) {
        const std::string& key = store.keys()[i];
        auto hits = store.top_k_similar(key, 1, f);
        if (hits.empty()) {
            ++skipped;
            continue;
        }
        std::string lt = label_of(key);
        std::string lp = label_of(hits[0].key);
        note(lt);
        note(lp);
        pairs.emplace_back(std::move(lt), std::move(lp));
    }
    if (pairs.empty()) fail(errc::degenerate, "no emoji had a neighbor passing the filter");

    GroupConfusionResult res;
    res.matrix = ConfusionMatrix(collect_group_labels(catalog, level, needed));
    size_t correct = 0;
    for (const auto& [t, p] : pairs) {
        res.matrix.add(t, p);
        if (t == p) ++correct;
    }
    res.precision = res.matrix.precision_stats();
    res.evaluated = pairs.size();
    res.skipped = skipped;
    res.per_emoji_accuracy = double(correct) / double(pairs.size());
    return res;
}

struct SimilarityJudgments {
    struct Pair {
        EmojiKey a;
        EmojiKey b;
        double score;
    };
    std::vector<Pair> pairs;
};

// CSV loader with configurable column names; emoji cells are normalized so
// the judgment keys line up with store keys.
inline SimilarityJudgments load_judgments_csv(std::istream& in, const std::string& col_a,
                                              const std::string& col_b,
                                              const std::string& col_score) {
    auto rows = csv::read_all(in);
    if (rows.empty()) fail(errc::format, "judgments file is empty");
    const auto& header = rows[0];
    int ia = -1, ib = -1, is = -1;
    for (size_t i = 0; i < header.size(); ++i) {
        if (header[i] == col_a) ia = int(i);
        if (header[i] == col_b) ib = int(i);
        if (header[i] == col_score) is = int(i);
    }
    if (ia < 0 || ib < 0 || is < 0)
        fail(errc::format, "judgments file lacks required columns '" + col_a + "', '" + col_b +
                               "', '" + col_score + "'");
    SimilarityJudgments out;
    std::unordered_set<std::string> seen;
    for (size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() <= size_t(std::max({ia, ib, is}))) continue;
        EmojiKey a = normalize_emoji_utf8(row[size_t(ia)]);
        EmojiKey b = normalize_emoji_utf8(row[size_t(ib)]);
        double score = 0.0;
        try {
            score = std::stod(row[size_t(is)]);
        } catch (...) {
            fail(errc::format, "judgments row " + std::to_string(r + 1) + ": bad score");
        }
        if (!std::isfinite(score))
            fail(errc::format, "judgments row " + std::to_string(r + 1) + ": non-finite score");
        std::string key = a.cps <= b.cps ? a.utf8() + "\x1f" + b.utf8() : b.utf8() + "\x1f" + a.utf8();
        if (!seen.insert(key).second) continue; // duplicate unordered pair: first wins
        out.pairs.push_back({std::move(a), std::move(b), score});
    }
    return out;
}

struct SpearmanReport {
    double rho = 0.0;
    size_t used_pairs = 0;
    size_t skipped_pairs = 0;
};

// Spearman rank correlation between human scores and embedding cosines over
// the pairs whose both keys exist in the store.
inline SpearmanReport spearman_correlation(const KeyedVectors& store,
                                           const SimilarityJudgments& judgments) {
    std::vector<double> human, model;
    size_t skipped = 0;
    for (const auto& p : judgments.pairs) {
        std::string a = p.a.utf8(), b = p.b.utf8();
        if (!store.has(a) || !store.has(b)) {
            ++skipped;
            continue;
        }
        human.push_back(p.score);
        model.push_back(store.cosine(a, b));
    }
    if (human.size() < 3)
        fail(errc::degenerate, "fewer than 3 usable judgment pairs (" +
                                   std::to_string(human.size()) + " found, " +
                                   std::to_string(skipped) + " skipped)");
    SpearmanReport rep;
    rep.rho = spearman(human, model);
    rep.used_pairs = human.size();
    rep.skipped_pairs = skipped;
    return rep;
}

} // namespace emojivec
