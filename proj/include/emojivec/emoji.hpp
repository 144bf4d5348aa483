#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "emojivec/error.hpp"
#include "emojivec/unicode_data.hpp"
#include "emojivec/utf8.hpp"

namespace emojivec {

// Normalized codepoint sequence identifying one emoji. Skin tones and
// variation selectors are stripped so platform variants collapse to one key;
// ZWJ joins are kept so composed emoji stay distinct from their parts.
struct EmojiKey {
    std::u32string cps;

    EmojiKey() = default;
    explicit EmojiKey(std::u32string codepoints) : cps(std::move(codepoints)) {}

    bool empty() const { return cps.empty(); }
    std::string utf8() const { return utf8::encode(cps); }

    bool operator==(const EmojiKey& o) const = default;
    auto operator<=>(const EmojiKey& o) const = default;
};

struct EmojiKeyHash {
    size_t operator()(const EmojiKey& k) const {
        size_t h = 1469598103934665603ULL;
        for (char32_t c : k.cps) {
            h ^= size_t(c);
            h *= 1099511628211ULL;
        }
        return h;
    }
};

// Strips skin-tone modifiers and variation selectors anywhere in the sequence,
// then repairs the ZWJ structure (no leading/trailing/doubled joiner).
// Idempotent. Throws when nothing but modifiers was passed in.
inline EmojiKey normalize_emoji(std::u32string_view seq) {
    std::u32string out;
    out.reserve(seq.size());
    for (char32_t cp : seq) {
        if (uni::is_skin_tone(cp) || uni::is_variation_selector(cp)) continue;
        if (uni::is_zwj(cp) && (out.empty() || uni::is_zwj(out.back()))) continue;
        out.push_back(cp);
    }
    while (!out.empty() && uni::is_zwj(out.back())) out.pop_back();
    if (out.empty())
        fail(errc::degenerate, "emoji sequence empty after stripping modifiers");
    return EmojiKey(std::move(out));
}

inline EmojiKey normalize_emoji_utf8(std::string_view s) { return normalize_emoji(utf8::decode(s)); }

enum class TokenKind { word, emoji };

struct Token {
    TokenKind kind;
    std::string word; // lowercased text, set for word tokens
    EmojiKey emoji;   // set for emoji tokens

    static Token make_word(std::string w) { return {TokenKind::word, std::move(w), {}}; }
    static Token make_emoji(EmojiKey k) { return {TokenKind::emoji, {}, std::move(k)}; }
    bool is_word() const { return kind == TokenKind::word; }
    bool is_emoji() const { return kind == TokenKind::emoji; }
};

enum class Qualification { fully_qualified, minimally_qualified, unqualified, component };

inline const char* qualification_name(Qualification q) {
    switch (q) {
    case Qualification::fully_qualified: return "fully-qualified";
    case Qualification::minimally_qualified: return "minimally-qualified";
    case Qualification::unqualified: return "unqualified";
    case Qualification::component: return "component";
    }
    return "?";
}

struct CatalogEntry {
    EmojiKey key;
    std::string name;
    std::string group;
    std::string subgroup;
    Qualification qualification = Qualification::fully_qualified;
};

// Lookup from normalized key to name and Unicode (sub-)group, plus a trie over
// the keys so the segmenter can do longest-match against catalog sequences
// (needed for tag-based sequences like subdivision flags).
class EmojiCatalog {
  public:
    EmojiCatalog() { trie_.push_back({}); }

    // First occurrence wins: normalization collapses variants onto one key.
    bool add(CatalogEntry entry) {
        if (index_.contains(entry.key)) return false;
        index_.emplace(entry.key, entries_.size());
        if (!entry.group.empty() && !group_index_.contains(entry.group)) {
            group_index_.emplace(entry.group, groups_.size());
            groups_.push_back(entry.group);
        }
        trie_insert(entry.key.cps);
        starts_.insert(entry.key.cps.front());
        entries_.push_back(std::move(entry));
        return true;
    }

    size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    const std::vector<CatalogEntry>& entries() const { return entries_; }

    const CatalogEntry* find(const EmojiKey& key) const {
        auto it = index_.find(key);
        return it == index_.end() ? nullptr : &entries_[it->second];
    }

    // Exact hit, then the key's first codepoint, then Unknown. Total function.
    std::pair<std::string, std::string> group_of(const EmojiKey& key) const {
        if (const auto* e = find(key)) return {e->group, e->subgroup};
        if (!key.cps.empty()) {
            if (const auto* e = find(EmojiKey(std::u32string(1, key.cps.front()))))
                return {e->group, e->subgroup};
        }
        return {"Unknown", "Unknown"};
    }

    // Groups in file order; stable across runs so matrix labels are reproducible.
    const std::vector<std::string>& group_order() const { return groups_; }

    bool is_catalog_start(char32_t cp) const { return starts_.contains(cp); }

    // Longest catalog match at cps[pos], tolerating skin tones and variation
    // selectors in the raw text (keys are stored normalized). Returns the raw
    // length consumed, 0 when nothing matches.
    size_t longest_match(std::u32string_view cps, size_t pos) const {
        size_t node = 0;
        size_t best = 0;
        size_t i = pos;
        bool advanced = false;
        while (i < cps.size()) {
            char32_t cp = cps[i];
            if (advanced && (uni::is_skin_tone(cp) || uni::is_variation_selector(cp))) {
                ++i;
                if (trie_[node].terminal) best = i - pos;
                continue;
            }
            auto it = trie_[node].next.find(cp);
            if (it == trie_[node].next.end()) break;
            node = it->second;
            advanced = true;
            ++i;
            if (trie_[node].terminal) best = i - pos;
        }
        return best;
    }

  private:
    struct TrieNode {
        std::unordered_map<char32_t, uint32_t> next;
        bool terminal = false;
    };

    void trie_insert(const std::u32string& key) {
        size_t node = 0;
        for (char32_t cp : key) {
            auto it = trie_[node].next.find(cp);
            if (it == trie_[node].next.end()) {
                trie_[node].next.emplace(cp, uint32_t(trie_.size()));
                node = trie_.size();
                trie_.push_back({});
            } else {
                node = it->second;
            }
        }
        trie_[node].terminal = true;
    }

    std::vector<CatalogEntry> entries_;
    std::unordered_map<EmojiKey, size_t, EmojiKeyHash> index_;
    std::vector<std::string> groups_;
    std::unordered_map<std::string, size_t> group_index_;
    std::vector<TrieNode> trie_;
    std::unordered_set<char32_t> starts_;
};

namespace detail {

inline bool parse_hex_cp(std::string_view tok, char32_t& out) {
    if (tok.empty() || tok.size() > 6) return false;
    char32_t v = 0;
    for (char c : tok) {
        v <<= 4;
        if (c >= '0' && c <= '9') v |= char32_t(c - '0');
        else if (c >= 'A' && c <= 'F') v |= char32_t(c - 'A' + 10);
        else if (c >= 'a' && c <= 'f') v |= char32_t(c - 'a' + 10);
        else return false;
    }
    if (v > 0x10FFFF) return false;
    out = v;
    return true;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::optional<Qualification> parse_qualification(std::string_view s) {
    if (s == "fully-qualified") return Qualification::fully_qualified;
    if (s == "minimally-qualified") return Qualification::minimally_qualified;
    if (s == "unqualified") return Qualification::unqualified;
    if (s == "component") return Qualification::component;
    return std::nullopt;
}

// The comment part of a data line reads `# <emoji> E<ver> <name>`; files
// predating the E-version column read `# <emoji> <name>`.
inline std::string parse_name_from_comment(std::string_view comment) {
    comment = trim(comment);
    size_t sp = comment.find(' ');
    if (sp == std::string_view::npos) return {};
    std::string_view rest = trim(comment.substr(sp + 1));
    if (rest.size() >= 2 && rest[0] == 'E' && rest[1] >= '0' && rest[1] <= '9') {
        size_t sp2 = rest.find(' ');
        if (sp2 != std::string_view::npos) rest = trim(rest.substr(sp2 + 1));
    }
    return std::string(rest);
}

} // namespace detail

// Parses the Unicode emoji-test.txt format: `# group:` / `# subgroup:` section
// comments followed by `<codepoints> ; <qualification> # <emoji> E<ver> <name>`
// data lines. Entries are keyed by their normalized sequence; component-only
// entries (bare skin tones) vanish under normalization and are skipped.
inline EmojiCatalog parse_emoji_catalog(std::istream& in) {
    EmojiCatalog catalog;
    std::string line;
    std::string group, subgroup;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view sv = detail::trim(line);
        if (sv.empty()) continue;
        if (sv.front() == '#') {
            std::string_view c = detail::trim(sv.substr(1));
            if (c.starts_with("group:")) {
                group = std::string(detail::trim(c.substr(6)));
                subgroup.clear();
            } else if (c.starts_with("subgroup:")) {
                subgroup = std::string(detail::trim(c.substr(9)));
            }
            continue;
        }
        // data line
        size_t semi = sv.find(';');
        if (semi == std::string_view::npos)
            fail(errc::format, "emoji catalog line " + std::to_string(line_no) + ": missing ';'");
        if (group.empty())
            fail(errc::format,
                 "emoji catalog line " + std::to_string(line_no) + ": data before any group comment");
        if (subgroup.empty())
            fail(errc::format,
                 "emoji catalog line " + std::to_string(line_no) + ": data before any subgroup comment");

        std::u32string cps;
        {
            std::string_view cp_part = detail::trim(sv.substr(0, semi));
            size_t p = 0;
            while (p < cp_part.size()) {
                size_t q = cp_part.find(' ', p);
                std::string_view tok = cp_part.substr(p, q == std::string_view::npos ? q : q - p);
                char32_t cp;
                if (!detail::parse_hex_cp(tok, cp))
                    fail(errc::format, "emoji catalog line " + std::to_string(line_no) +
                                           ": bad codepoint '" + std::string(tok) + "'");
                cps.push_back(cp);
                if (q == std::string_view::npos) break;
                p = cp_part.find_first_not_of(' ', q);
                if (p == std::string_view::npos) break;
            }
        }
        if (cps.empty())
            fail(errc::format, "emoji catalog line " + std::to_string(line_no) + ": no codepoints");

        std::string_view rest = sv.substr(semi + 1);
        size_t hash = rest.find('#');
        std::string_view status = detail::trim(hash == std::string_view::npos ? rest : rest.substr(0, hash));
        auto qual = detail::parse_qualification(status);
        if (!qual)
            fail(errc::format, "emoji catalog line " + std::to_string(line_no) +
                                   ": unknown qualification '" + std::string(status) + "'");

        std::string name;
        if (hash != std::string_view::npos) name = detail::parse_name_from_comment(rest.substr(hash + 1));

        bool only_modifiers = true;
        for (char32_t cp : cps)
            if (!uni::is_skin_tone(cp) && !uni::is_variation_selector(cp) && !uni::is_zwj(cp))
                only_modifiers = false;
        if (only_modifiers) continue;

        catalog.add({normalize_emoji(cps), std::move(name), group, subgroup, *qual});
    }
    return catalog;
}

// Writes the catalog back in the same format. parse(serialize(c)) preserves
// entry count and group assignments.
inline void serialize_catalog(const EmojiCatalog& catalog, std::ostream& out) {
    std::string group, subgroup;
    for (const auto& e : catalog.entries()) {
        if (e.group != group) {
            group = e.group;
            subgroup.clear();
            out << "\n# group: " << group << "\n";
        }
        if (e.subgroup != subgroup) {
            subgroup = e.subgroup;
            out << "\n# subgroup: " << subgroup << "\n";
        }
        bool first = true;
        for (char32_t cp : e.key.cps) {
            if (!first) out << ' ';
            first = false;
            char buf[8];
            std::snprintf(buf, sizeof(buf), "%04X", uint32_t(cp));
            out << buf;
        }
        out << " ; " << qualification_name(e.qualification) << " # " << e.key.utf8() << " E0.0 "
            << e.name << "\n";
    }
}

namespace detail {

// One emoji element: base codepoint (pictographic / regional indicator /
// keycap sequence), then any run of skin tones, variation selectors or tags.
// Returns length consumed, 0 if cps[pos] cannot start an element.
inline size_t match_emoji_element(std::u32string_view cps, size_t pos, const EmojiCatalog* catalog) {
    if (pos >= cps.size()) return 0;
    char32_t cp = cps[pos];
    size_t i = pos;

    if (uni::is_regional_indicator(cp)) {
        i += (pos + 1 < cps.size() && uni::is_regional_indicator(cps[pos + 1])) ? 2 : 1;
    } else if (uni::is_keycap_base(cp)) {
        size_t j = pos + 1;
        if (j < cps.size() && uni::is_variation_selector(cps[j])) ++j;
        if (j < cps.size() && cps[j] == uni::kCombiningKeycap) i = j + 1;
        else return 0; // bare digit or '#': plain text
    } else if (uni::is_extended_pictographic(cp) ||
               (catalog && catalog->is_catalog_start(cp) && !uni::is_skin_tone(cp) &&
                !uni::is_variation_selector(cp))) {
        i = pos + 1;
    } else {
        return 0;
    }

    while (i < cps.size() &&
           (uni::is_skin_tone(cps[i]) || uni::is_variation_selector(cps[i]) || uni::is_tag(cps[i])))
        ++i;
    return i - pos;
}

// Maximal emoji run: element (ZWJ element)*.
inline size_t match_emoji_run(std::u32string_view cps, size_t pos, const EmojiCatalog* catalog) {
    size_t len = match_emoji_element(cps, pos, catalog);
    if (len == 0) return 0;
    size_t i = pos + len;
    while (i < cps.size() && uni::is_zwj(cps[i])) {
        size_t next = match_emoji_element(cps, i + 1, catalog);
        if (next == 0) break;
        i += 1 + next;
    }
    return i - pos;
}

} // namespace detail

// True when the whole string is a single emoji sequence. Used to tell emoji
// keys from word keys in mixed vector stores.
inline bool is_emoji_key_string(std::string_view s) {
    if (s.empty()) return false;
    std::u32string cps = utf8::decode(s);
    return detail::match_emoji_run(cps, 0, nullptr) == cps.size();
}

struct SegmentedText {
    std::vector<Token> tokens;
    // Raw (pre-normalization) codepoints of each emoji token, in token order.
    std::vector<std::u32string> raw_emoji;
};

// Splits text into word and emoji tokens. Emoji spans are found by the longer
// of the generic pictographic-run rule and the catalog longest match; words
// are the whitespace-separated remainder, lowercased but otherwise uncleaned.
inline SegmentedText segment_full(std::string_view text, const EmojiCatalog& catalog) {
    SegmentedText out;
    std::u32string cps = utf8::decode(text);
    std::u32string word;
    auto flush_word = [&] {
        if (word.empty()) return;
        for (auto& cp : word) cp = utf8::to_lower(cp);
        out.tokens.push_back(Token::make_word(utf8::encode(word)));
        word.clear();
    };
    size_t i = 0;
    while (i < cps.size()) {
        char32_t cp = cps[i];
        if (utf8::is_whitespace(cp)) {
            flush_word();
            ++i;
            continue;
        }
        size_t run = detail::match_emoji_run(cps, i, &catalog);
        size_t trie = catalog.longest_match(cps, i);
        size_t len = std::max(run, trie);
        if (len > 0) {
            flush_word();
            std::u32string raw = cps.substr(i, len);
            out.tokens.push_back(Token::make_emoji(normalize_emoji(raw)));
            out.raw_emoji.push_back(std::move(raw));
            i += len;
            continue;
        }
        word.push_back(cp);
        ++i;
    }
    flush_word();
    return out;
}

inline std::vector<Token> segment(std::string_view text, const EmojiCatalog& catalog) {
    return segment_full(text, catalog).tokens;
}

} // namespace emojivec
