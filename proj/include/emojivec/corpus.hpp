#pragma once

#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "emojivec/emoji.hpp"
#include "emojivec/error.hpp"
#include "emojivec/utf8.hpp"

namespace emojivec {

struct RawPost {
    std::string id;
    std::string text;
};

// Input is one post per line, optionally `id<TAB>text`. Explicit duplicate ids
// are rejected; the line number doubles as the id otherwise.
template <typename Fn> void for_each_post(std::istream& in, Fn&& fn) {
    std::string line;
    size_t line_no = 0;
    std::unordered_set<std::string> seen_ids;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        RawPost post;
        size_t tab = line.find('\t');
        if (tab != std::string::npos) {
            post.id = line.substr(0, tab);
            post.text = line.substr(tab + 1);
            if (!seen_ids.insert(post.id).second)
                fail(errc::format, "duplicate post id '" + post.id + "' at line " + std::to_string(line_no));
        } else {
            post.id = std::to_string(line_no);
            post.text = line;
        }
        fn(std::move(post));
    }
}

struct CleanSentence {
    std::vector<Token> tokens;
    size_t word_count = 0;
    size_t emoji_count = 0;
};

// Optional word→word hook, applied after lowercasing. The identity default
// keeps the pipeline self-contained; plug a lemmatizer here if you have one.
using WordHook = std::function<std::string(const std::string&)>;

namespace detail {

// Lowercase, hook, strip non-letter edges; then the word must be purely
// alphabetic and at least 3 codepoints long to survive.
inline std::optional<std::string> clean_word(const std::string& raw, const WordHook& hook) {
    std::string w = utf8::lowercase(raw);
    if (hook) w = hook(w);
    std::u32string cps = utf8::decode(w);
    size_t lo = 0, hi = cps.size();
    while (lo < hi && !utf8::is_letter(cps[lo])) ++lo;
    while (hi > lo && !utf8::is_letter(cps[hi - 1])) --hi;
    if (hi - lo < 3) return std::nullopt;
    for (size_t i = lo; i < hi; ++i)
        if (!utf8::is_letter(cps[i])) return std::nullopt;
    return utf8::encode(std::u32string_view(cps).substr(lo, hi - lo));
}

} // namespace detail

// Applies the word filters, keeps every emoji, and drops the sentence unless
// at least two words survive.
inline std::optional<CleanSentence> clean_sentence(const std::vector<Token>& tokens,
                                                   const WordHook& hook = {}) {
    CleanSentence out;
    out.tokens.reserve(tokens.size());
    for (const auto& t : tokens) {
        if (t.is_emoji()) {
            out.tokens.push_back(t);
            ++out.emoji_count;
            continue;
        }
        if (auto w = detail::clean_word(t.word, hook)) {
            out.tokens.push_back(Token::make_word(std::move(*w)));
            ++out.word_count;
        }
    }
    if (out.word_count < 2) return std::nullopt;
    return out;
}

struct CorpusStats {
    uint64_t sentences_total = 0;
    uint64_t sentences_clean = 0;
    uint64_t emojis_total = 0;
    uint64_t sentences_with_emoji = 0;
    double emojis_per_emoji_sentence = 0.0;
    uint64_t unique_emoji_raw = 0;
    uint64_t unique_emoji_normalized = 0;
};

// Associative accumulator so parallel shards merge to the same totals as a
// single pass. Emoji counts are taken over clean sentences only.
struct StatsAccumulator {
    uint64_t sentences_total = 0;
    uint64_t sentences_clean = 0;
    uint64_t emojis_total = 0;
    uint64_t sentences_with_emoji = 0;
    std::unordered_set<std::u32string> raw_emoji;
    std::unordered_map<EmojiKey, uint64_t, EmojiKeyHash> emoji_counts;

    void add(const SegmentedText& seg, const std::optional<CleanSentence>& cleaned) {
        ++sentences_total;
        if (!cleaned) return;
        ++sentences_clean;
        if (cleaned->emoji_count > 0) ++sentences_with_emoji;
        emojis_total += cleaned->emoji_count;
        for (const auto& raw : seg.raw_emoji) raw_emoji.insert(raw);
        for (const auto& t : cleaned->tokens)
            if (t.is_emoji()) ++emoji_counts[t.emoji];
    }

    void merge(const StatsAccumulator& o) {
        sentences_total += o.sentences_total;
        sentences_clean += o.sentences_clean;
        emojis_total += o.emojis_total;
        sentences_with_emoji += o.sentences_with_emoji;
        raw_emoji.insert(o.raw_emoji.begin(), o.raw_emoji.end());
        for (const auto& [k, c] : o.emoji_counts) emoji_counts[k] += c;
    }

    CorpusStats finalize() const {
        CorpusStats s;
        s.sentences_total = sentences_total;
        s.sentences_clean = sentences_clean;
        s.emojis_total = emojis_total;
        s.sentences_with_emoji = sentences_with_emoji;
        s.emojis_per_emoji_sentence =
            sentences_with_emoji ? double(emojis_total) / double(sentences_with_emoji) : 0.0;
        s.unique_emoji_raw = raw_emoji.size();
        s.unique_emoji_normalized = emoji_counts.size();
        return s;
    }
};

// One pass over a raw corpus: segment, clean, and hand both views to the sink.
template <typename Fn>
void process_corpus(std::istream& in, const EmojiCatalog& catalog, const WordHook& hook, Fn&& sink) {
    for_each_post(in, [&](RawPost&& post) {
        SegmentedText seg = segment_full(post.text, catalog);
        auto cleaned = clean_sentence(seg.tokens, hook);
        sink(post, seg, cleaned);
    });
}

inline CorpusStats compute_stats(std::istream& in, const EmojiCatalog& catalog,
                                 const WordHook& hook = {}) {
    StatsAccumulator acc;
    process_corpus(in, catalog, hook,
                   [&](const RawPost&, const SegmentedText& seg,
                       const std::optional<CleanSentence>& cleaned) { acc.add(seg, cleaned); });
    return acc.finalize();
}

inline std::string sentence_line(const CleanSentence& s) {
    std::string out;
    for (const auto& t : s.tokens) {
        if (!out.empty()) out.push_back(' ');
        out += t.is_word() ? t.word : t.emoji.utf8();
    }
    return out;
}

inline void write_stats_text(const CorpusStats& s, std::ostream& out) {
    out << "sentences_total " << s.sentences_total << "\n"
        << "sentences_clean " << s.sentences_clean << "\n"
        << "emojis_total " << s.emojis_total << "\n"
        << "sentences_with_emoji " << s.sentences_with_emoji << "\n"
        << "emojis_per_emoji_sentence " << s.emojis_per_emoji_sentence << "\n"
        << "unique_emoji_raw " << s.unique_emoji_raw << "\n"
        << "unique_emoji_normalized " << s.unique_emoji_normalized << "\n";
}

inline void write_stats_csv(const CorpusStats& s, std::ostream& out) {
    out << "metric,value\n"
        << "sentences_total," << s.sentences_total << "\n"
        << "sentences_clean," << s.sentences_clean << "\n"
        << "emojis_total," << s.emojis_total << "\n"
        << "sentences_with_emoji," << s.sentences_with_emoji << "\n"
        << "emojis_per_emoji_sentence," << s.emojis_per_emoji_sentence << "\n"
        << "unique_emoji_raw," << s.unique_emoji_raw << "\n"
        << "unique_emoji_normalized," << s.unique_emoji_normalized << "\n";
}

} // namespace emojivec
