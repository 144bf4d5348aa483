#include <catch2/catch.hpp>

#include <random>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "emojivec/emoji.hpp"
#include "helpers.hpp"

using namespace emojivec;
using testutil::key;

TEST_CASE("normalize_emoji strips skin tones") {
    auto k = normalize_emoji(std::u32string{0x1F44D, 0x1F3FD});
    CHECK(k == key({0x1F44D}));
}

TEST_CASE("normalize_emoji strips variation selectors but keeps ZWJ") {
    auto k = normalize_emoji(std::u32string{0x1F3F3, 0xFE0F, 0x200D, 0x1F308});
    CHECK(k == key({0x1F3F3, 0x200D, 0x1F308}));
}

TEST_CASE("normalize_emoji is identity on unmodified emoji") {
    CHECK(normalize_emoji(std::u32string{0x1F600}) == key({0x1F600}));
}

TEST_CASE("normalize_emoji rejects modifier-only input") {
    CHECK_THROWS_AS(normalize_emoji(std::u32string{0x1F3FD, 0xFE0F}), error);
}

TEST_CASE("normalize_emoji repairs dangling joiners") {
    // stripping can expose a leading/trailing ZWJ; the key invariant forbids it
    auto k = normalize_emoji(std::u32string{0xFE0F, 0x200D, 0x1F308, 0x200D, 0xFE0F});
    CHECK(k == key({0x1F308}));
}

TEST_CASE("normalize_emoji is idempotent under random modifier insertion") {
    std::mt19937 rng(7);
    std::uniform_int_distribution<int> base_pick(0, 3);
    const std::u32string bases[] = {
        {0x1F600}, {0x1F469, 0x200D, 0x1F33E}, {0x1F3F3, 0x200D, 0x1F308}, {0x1F44D}};
    const char32_t mods[] = {0x1F3FB, 0x1F3FC, 0x1F3FD, 0x1F3FE, 0x1F3FF, 0xFE0E, 0xFE0F};
    std::uniform_int_distribution<int> mod_pick(0, 6);
    for (int trial = 0; trial < 500; ++trial) {
        std::u32string seq = bases[size_t(base_pick(rng))];
        std::uniform_int_distribution<size_t> pos(0, seq.size());
        int inserts = int(rng() % 4);
        for (int i = 0; i < inserts; ++i) seq.insert(seq.begin() + long(pos(rng) % (seq.size() + 1)),
                                                     mods[size_t(mod_pick(rng))]);
        auto once = normalize_emoji(seq);
        auto twice = normalize_emoji(once.cps);
        CHECK(once == twice);
        // key invariants
        for (char32_t cp : once.cps) {
            CHECK_FALSE(uni::is_skin_tone(cp));
            CHECK_FALSE(uni::is_variation_selector(cp));
        }
        CHECK_FALSE(uni::is_zwj(once.cps.front()));
        CHECK_FALSE(uni::is_zwj(once.cps.back()));
    }
}

TEST_CASE("parse_emoji_catalog reads the documented line format") {
    std::istringstream in("# group: Smileys & Emotion\n"
                          "# subgroup: face-smiling\n"
                          "1F600 ; fully-qualified # \xF0\x9F\x98\x80 E1.0 grinning face\n");
    auto cat = parse_emoji_catalog(in);
    REQUIRE(cat.size() == 1);
    const auto* e = cat.find(key({0x1F600}));
    REQUIRE(e != nullptr);
    CHECK(e->name == "grinning face");
    CHECK(e->group == "Smileys & Emotion");
    CHECK(e->subgroup == "face-smiling");
    CHECK(e->qualification == Qualification::fully_qualified);
}

TEST_CASE("parse_emoji_catalog on empty input yields empty catalog") {
    std::istringstream in("");
    CHECK(parse_emoji_catalog(in).size() == 0);
}

TEST_CASE("parse_emoji_catalog rejects data before a group comment") {
    std::istringstream in("1F600 ; fully-qualified # x E1.0 grinning face\n");
    CHECK_THROWS_AS(parse_emoji_catalog(in), error);
}

TEST_CASE("parse_emoji_catalog reports the offending line number") {
    std::istringstream in("# group: G\n# subgroup: s\n1F600 ; bogus-status # x\n");
    try {
        parse_emoji_catalog(in);
        FAIL("expected parse error");
    } catch (const error& e) {
        CHECK(e.code() == errc::format);
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

namespace {

// Independent scan of the raw catalog text: count fully-qualified data lines
// and how many collapse onto an already-seen normalized key.
struct RawScan {
    size_t fq_lines = 0;
    size_t fq_collisions = 0;
    size_t unique_keys = 0;
};

RawScan scan_catalog_text(const std::string& text) {
    RawScan out;
    std::unordered_set<std::string> seen_any;
    std::unordered_set<std::string> seen_fq;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto semi = line.find(';');
        if (semi == std::string::npos) continue;
        std::u32string cps;
        std::istringstream cpin(line.substr(0, semi));
        std::string tok;
        while (cpin >> tok) cps.push_back(char32_t(std::stoul(tok, nullptr, 16)));
        std::u32string norm;
        for (char32_t cp : cps)
            if (!uni::is_skin_tone(cp) && !uni::is_variation_selector(cp)) norm.push_back(cp);
        if (norm.empty()) continue; // component-only entries normalize away
        std::string k = utf8::encode(norm);
        bool is_fq = line.find("fully-qualified") != std::string::npos;
        if (is_fq) {
            ++out.fq_lines;
            if (!seen_fq.insert(k).second) ++out.fq_collisions;
        }
        if (seen_any.insert(k).second) ++out.unique_keys;
    }
    return out;
}

} // namespace

TEST_CASE("catalog entry count matches an independent scan of the source") {
    // Prefer the published file when available; the fixture otherwise.
    std::string text;
    {
        std::ifstream real("data/emoji-test.txt");
        if (real) {
            std::ostringstream ss;
            ss << real.rdbuf();
            text = ss.str();
        } else {
            text = testutil::kCatalogFixture;
        }
    }
    RawScan scan = scan_catalog_text(text);
    std::istringstream in(text);
    auto cat = parse_emoji_catalog(in);
    CHECK(cat.size() == scan.unique_keys);
    // every fully-qualified line is represented exactly once after normalization
    CHECK(scan.fq_lines - scan.fq_collisions <= cat.size());
    size_t fq_entries = 0;
    for (const auto& e : cat.entries())
        if (e.qualification == Qualification::fully_qualified) ++fq_entries;
    CHECK(fq_entries == scan.fq_lines - scan.fq_collisions);
}

TEST_CASE("catalog collisions keep the first occurrence") {
    auto cat = testutil::fixture_catalog();
    const auto* heart = cat.find(key({0x2764}));
    REQUIRE(heart != nullptr);
    CHECK(heart->qualification == Qualification::fully_qualified); // FQ line came first
    const auto* thumbs = cat.find(key({0x1F44D}));
    REQUIRE(thumbs != nullptr);
    CHECK(thumbs->name == "thumbs up"); // not one of the skin-tone variants
}

TEST_CASE("group_of resolves exact, fallback and unknown") {
    auto cat = testutil::fixture_catalog();
    CHECK(cat.group_of(key({0x1F600})) ==
          std::pair<std::string, std::string>{"Smileys & Emotion", "face-smiling"});
    // key absent, but its first codepoint is catalogued
    CHECK(cat.group_of(key({0x1F468, 0x200D, 0x1F9B2})).first == "People & Body");
    CHECK(cat.group_of(key({U'A'})) == std::pair<std::string, std::string>{"Unknown", "Unknown"});
}

TEST_CASE("serialize and reparse keeps entries and groups") {
    auto cat = testutil::fixture_catalog();
    std::ostringstream out;
    serialize_catalog(cat, out);
    std::istringstream in(out.str());
    auto back = parse_emoji_catalog(in);
    REQUIRE(back.size() == cat.size());
    for (const auto& e : cat.entries()) {
        const auto* b = back.find(e.key);
        REQUIRE(b != nullptr);
        CHECK(b->group == e.group);
        CHECK(b->subgroup == e.subgroup);
        CHECK(b->name == e.name);
    }
}

TEST_CASE("segment splits words and emoji runs") {
    auto cat = testutil::fixture_catalog();
    auto toks = segment("Prost \xF0\x9F\x8D\xBB\xF0\x9F\x8E\x89", cat);
    REQUIRE(toks.size() == 3);
    CHECK(toks[0].is_word());
    CHECK(toks[0].word == "prost");
    CHECK(toks[1].emoji == key({0x1F37B}));
    CHECK(toks[2].emoji == key({0x1F389}));
}

TEST_CASE("segment keeps ZWJ sequences whole and strips skin tones") {
    auto cat = testutil::fixture_catalog();
    // woman farmer with medium skin tone, then a word
    auto toks = segment("\xF0\x9F\x91\xA9\xF0\x9F\x8F\xBD\xE2\x80\x8D\xF0\x9F\x8C\xBE ok", cat);
    REQUIRE(toks.size() == 2);
    CHECK(toks[0].emoji == key({0x1F469, 0x200D, 0x1F33E}));
    CHECK(toks[1].word == "ok");
}

TEST_CASE("segment of empty text is empty") {
    auto cat = testutil::fixture_catalog();
    CHECK(segment("", cat).empty());
}

TEST_CASE("segment handles flags, keycaps and tag sequences") {
    auto cat = testutil::fixture_catalog();
    SECTION("regional indicator pairs") {
        auto toks = segment("\xF0\x9F\x87\xA9\xF0\x9F\x87\xAA\xF0\x9F\x87\xAB\xF0\x9F\x87\xB7", cat);
        REQUIRE(toks.size() == 2);
        CHECK(toks[0].emoji == key({0x1F1E9, 0x1F1EA}));
        CHECK(toks[1].emoji == key({0x1F1EB, 0x1F1F7}));
    }
    SECTION("keycap sequence is one token, bare '#' stays text") {
        auto toks = segment("#\xEF\xB8\x8F\xE2\x83\xA3 #tag", cat);
        REQUIRE(toks.size() == 2);
        CHECK(toks[0].emoji == key({U'#', 0x20E3}));
        CHECK(toks[1].word == "#tag");
    }
    SECTION("subdivision flag matches through the catalog trie") {
        auto toks = segment("\xF0\x9F\x8F\xB4\xF3\xA0\x81\xA7\xF3\xA0\x81\xA2\xF3\xA0\x81\xA5"
                            "\xF3\xA0\x81\xAE\xF3\xA0\x81\xA7\xF3\xA0\x81\xBF hi",
                            cat);
        REQUIRE(toks.size() == 2);
        CHECK(toks[0].is_emoji());
        CHECK(toks[0].emoji.cps.size() == 7);
        CHECK(toks[1].word == "hi");
    }
    SECTION("unrecognized pictographic singleton still tokenizes") {
        auto toks = segment("\xF0\x9F\xA7\xB2", cat); // magnet, absent from the fixture
        REQUIRE(toks.size() == 1);
        CHECK(toks[0].is_emoji());
        CHECK(toks[0].emoji == key({0x1F9F2}));
    }
}

TEST_CASE("segment never drops pictographic codepoints") {
    auto cat = testutil::fixture_catalog();
    std::mt19937 rng(99);
    const std::string emojis[] = {"\xF0\x9F\x98\x80", "\xF0\x9F\x8D\xBB",
                                  "\xF0\x9F\x91\xA9\xE2\x80\x8D\xF0\x9F\x8C\xBE",
                                  "\xF0\x9F\x91\x8D\xF0\x9F\x8F\xBD", "\xE2\x9A\xBD"};
    const std::string words[] = {"Hallo", "Bier!", "x", "gut,"};
    for (int trial = 0; trial < 200; ++trial) {
        std::string text;
        int parts = 1 + int(rng() % 8);
        for (int i = 0; i < parts; ++i) {
            if (rng() % 2) text += emojis[rng() % 5];
            else text += words[rng() % 4];
            if (rng() % 2) text += ' ';
        }
        auto count_pict = [](const std::u32string& cps) {
            size_t c = 0;
            for (char32_t cp : cps)
                if (uni::is_extended_pictographic(cp) && !uni::is_skin_tone(cp)) ++c;
            return c;
        };
        size_t in_count = count_pict(utf8::decode(text));
        size_t out_count = 0;
        for (const auto& t : segment(text, cat))
            if (t.is_emoji()) out_count += count_pict(t.emoji.cps);
        CHECK(in_count == out_count);
    }
}

TEST_CASE("every emoji key from segment satisfies the key invariants") {
    auto cat = testutil::fixture_catalog();
    std::mt19937 rng(3);
    const char32_t mods[] = {0x1F3FB, 0x1F3FF, 0xFE0F, 0xFE0E};
    for (int trial = 0; trial < 200; ++trial) {
        std::u32string text = {0x1F469, 0x200D, 0x1F33E};
        // pepper with random modifiers
        for (int i = 0; i < int(rng() % 4); ++i)
            text.insert(text.begin() + long(rng() % (text.size() + 1)), mods[rng() % 4]);
        text.push_back(U' ');
        text.push_back(0x1F600);
        for (const auto& t : segment(utf8::encode(text), cat)) {
            if (!t.is_emoji()) continue;
            REQUIRE_FALSE(t.emoji.cps.empty());
            for (char32_t cp : t.emoji.cps) {
                CHECK_FALSE(uni::is_skin_tone(cp));
                CHECK_FALSE(uni::is_variation_selector(cp));
            }
            CHECK_FALSE(uni::is_zwj(t.emoji.cps.front()));
            CHECK_FALSE(uni::is_zwj(t.emoji.cps.back()));
        }
    }
}

TEST_CASE("emoji embedded in a word splits the word") {
    auto cat = testutil::fixture_catalog();
    auto toks = segment("abc\xF0\x9F\x8D\xBB""def", cat);
    REQUIRE(toks.size() == 3);
    CHECK(toks[0].word == "abc");
    CHECK(toks[1].is_emoji());
    CHECK(toks[2].word == "def");
}

TEST_CASE("segment survives arbitrary byte garbage") {
    auto cat = testutil::fixture_catalog();
    std::mt19937 rng(1234);
    // emoji fragments, modifiers and joiners to splice between raw bytes;
    // truncations of these are exactly the malformed input seen in the wild
    const std::string pieces[] = {
        "\xF0\x9F\x8D\xBB", "\xF0\x9F\x91\xA9\xE2\x80\x8D\xF0\x9F\x8C\xBE",
        "\xE2\x80\x8D",     "\xF0\x9F\x8F\xBD",
        "\xEF\xB8\x8F",     "\xF0\x9F\x87\xA9",
        "#\xE2\x83\xA3",    "\xE2\x9A\xBD",
    };
    size_t emoji_tokens = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::string junk;
        int parts = 1 + int(rng() % 10);
        for (int p = 0; p < parts; ++p) {
            if (rng() % 2) {
                std::string frag = pieces[rng() % 8];
                frag.resize(1 + rng() % frag.size()); // possibly truncated mid-codepoint
                junk += frag;
            } else {
                size_t len = rng() % 8;
                for (size_t i = 0; i < len; ++i) junk.push_back(char(rng() % 256));
            }
        }
        auto toks = segment(junk, cat); // must not crash or throw
        for (const auto& t : toks) {
            if (!t.is_emoji()) continue;
            ++emoji_tokens;
            REQUIRE_FALSE(t.emoji.cps.empty());
            CHECK_FALSE(uni::is_zwj(t.emoji.cps.front()));
            CHECK_FALSE(uni::is_zwj(t.emoji.cps.back()));
        }
    }
    CHECK(emoji_tokens > 100); // the splicing must actually exercise emoji paths
}

TEST_CASE("is_emoji_key_string distinguishes store keys") {
    CHECK(is_emoji_key_string("\xF0\x9F\x8D\xBB"));
    CHECK(is_emoji_key_string("\xF0\x9F\x91\xA9\xE2\x80\x8D\xF0\x9F\x8C\xBE"));
    CHECK(is_emoji_key_string("\xF0\x9F\x87\xA9\xF0\x9F\x87\xAA"));
    CHECK(is_emoji_key_string("#\xE2\x83\xA3"));
    CHECK_FALSE(is_emoji_key_string("bier"));
    CHECK_FALSE(is_emoji_key_string("#tag"));
    CHECK_FALSE(is_emoji_key_string(""));
}
