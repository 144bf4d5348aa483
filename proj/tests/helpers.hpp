#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "emojivec/emoji.hpp"
#include "emojivec/keyed_vectors.hpp"

namespace testutil {

// Excerpt of the Unicode 13.0 emoji-test.txt file, format-faithful: padded
// codepoint column, qualification, `# <emoji> E<ver> <name>` comments, and the
// group/subgroup section headers. Includes skin-tone variants and component
// entries so normalization collisions are exercised.
inline const char* kCatalogFixture =
    "# emoji-test.txt\n"
    "# Version: 13.0\n"
    "\n"
    "# group: Smileys & Emotion\n"
    "\n"
    "# subgroup: face-smiling\n"
    "1F600                                                  ; fully-qualified     # \xF0\x9F\x98\x80 E1.0 grinning face\n"
    "1F603                                                  ; fully-qualified     # \xF0\x9F\x98\x83 E0.6 grinning face with big eyes\n"
    "1F609                                                  ; fully-qualified     # \xF0\x9F\x98\x89 E0.6 winking face\n"
    "\n"
    "# subgroup: emotion\n"
    "2764 FE0F                                              ; fully-qualified     # \xE2\x9D\xA4\xEF\xB8\x8F E0.6 red heart\n"
    "2764                                                   ; unqualified         # \xE2\x9D\xA4 E0.6 red heart\n"
    "\n"
    "# group: People & Body\n"
    "\n"
    "# subgroup: hand-fingers-closed\n"
    "1F44D                                                  ; fully-qualified     # \xF0\x9F\x91\x8D E0.6 thumbs up\n"
    "1F44D 1F3FB                                            ; fully-qualified     # \xF0\x9F\x91\x8D\xF0\x9F\x8F\xBB E1.0 thumbs up: light skin tone\n"
    "1F44D 1F3FC                                            ; fully-qualified     # \xF0\x9F\x91\x8D\xF0\x9F\x8F\xBC E1.0 thumbs up: medium-light skin tone\n"
    "1F44D 1F3FD                                            ; fully-qualified     # \xF0\x9F\x91\x8D\xF0\x9F\x8F\xBD E1.0 thumbs up: medium skin tone\n"
    "1F44D 1F3FE                                            ; fully-qualified     # \xF0\x9F\x91\x8D\xF0\x9F\x8F\xBE E1.0 thumbs up: medium-dark skin tone\n"
    "1F44D 1F3FF                                            ; fully-qualified     # \xF0\x9F\x91\x8D\xF0\x9F\x8F\xBF E1.0 thumbs up: dark skin tone\n"
    "\n"
    "# subgroup: person\n"
    "1F468                                                  ; fully-qualified     # \xF0\x9F\x91\xA8 E0.6 man\n"
    "\n"
    "# subgroup: person-role\n"
    "1F469 200D 1F33E                                       ; fully-qualified     # \xF0\x9F\x91\xA9\xE2\x80\x8D\xF0\x9F\x8C\xBE E4.0 woman farmer\n"
    "1F468 200D 1F373                                       ; fully-qualified     # \xF0\x9F\x91\xA8\xE2\x80\x8D\xF0\x9F\x8D\xB3 E4.0 man cook\n"
    "\n"
    "# subgroup: family\n"
    "1F468 200D 1F469 200D 1F466                            ; fully-qualified     # \xF0\x9F\x91\xA8\xE2\x80\x8D\xF0\x9F\x91\xA9\xE2\x80\x8D\xF0\x9F\x91\xA6 E2.0 family: man, woman, boy\n"
    "\n"
    "# group: Animals & Nature\n"
    "\n"
    "# subgroup: animal-mammal\n"
    "1F436                                                  ; fully-qualified     # \xF0\x9F\x90\xB6 E0.6 dog face\n"
    "\n"
    "# group: Food & Drink\n"
    "\n"
    "# subgroup: food-fruit\n"
    "1F351                                                  ; fully-qualified     # \xF0\x9F\x8D\x91 E0.6 peach\n"
    "1F346                                                  ; fully-qualified     # \xF0\x9F\x8D\x86 E0.6 eggplant\n"
    "\n"
    "# subgroup: drink\n"
    "1F377                                                  ; fully-qualified     # \xF0\x9F\x8D\xB7 E0.6 wine glass\n"
    "1F37A                                                  ; fully-qualified     # \xF0\x9F\x8D\xBA E0.6 beer mug\n"
    "1F37B                                                  ; fully-qualified     # \xF0\x9F\x8D\xBB E0.6 clinking beer mugs\n"
    "\n"
    "# group: Travel & Places\n"
    "\n"
    "# subgroup: place-building\n"
    "1F3F0                                                  ; fully-qualified     # \xF0\x9F\x8F\xB0 E0.6 castle\n"
    "\n"
    "# group: Activities\n"
    "\n"
    "# subgroup: event\n"
    "1F384                                                  ; fully-qualified     # \xF0\x9F\x8E\x84 E0.6 Christmas tree\n"
    "1F389                                                  ; fully-qualified     # \xF0\x9F\x8E\x89 E0.6 party popper\n"
    "\n"
    "# subgroup: sport\n"
    "26BD                                                   ; fully-qualified     # \xE2\x9A\xBD E0.6 soccer ball\n"
    "\n"
    "# group: Objects\n"
    "\n"
    "# subgroup: tool\n"
    "1F528                                                  ; fully-qualified     # \xF0\x9F\x94\xA8 E0.6 hammer\n"
    "\n"
    "# group: Symbols\n"
    "\n"
    "# subgroup: math\n"
    "2795                                                   ; fully-qualified     # \xE2\x9E\x95 E0.6 plus\n"
    "\n"
    "# subgroup: keycap\n"
    "0023 FE0F 20E3                                         ; fully-qualified     # #\xEF\xB8\x8F\xE2\x83\xA3 E0.6 keycap: #\n"
    "0023 20E3                                              ; unqualified         # #\xE2\x83\xA3 E0.6 keycap: #\n"
    "0037 FE0F 20E3                                         ; fully-qualified     # 7\xEF\xB8\x8F\xE2\x83\xA3 E0.6 keycap: 7\n"
    "\n"
    "# group: Flags\n"
    "\n"
    "# subgroup: flag\n"
    "1F3F3 FE0F                                             ; fully-qualified     # \xF0\x9F\x8F\xB3\xEF\xB8\x8F E0.7 white flag\n"
    "1F3F3                                                  ; unqualified         # \xF0\x9F\x8F\xB3 E0.7 white flag\n"
    "1F3F3 FE0F 200D 1F308                                  ; fully-qualified     # \xF0\x9F\x8F\xB3\xEF\xB8\x8F\xE2\x80\x8D\xF0\x9F\x8C\x88 E4.0 rainbow flag\n"
    "1F3F3 200D 1F308                                       ; unqualified         # \xF0\x9F\x8F\xB3\xE2\x80\x8D\xF0\x9F\x8C\x88 E4.0 rainbow flag\n"
    "\n"
    "# subgroup: country-flag\n"
    "1F1E9 1F1EA                                            ; fully-qualified     # \xF0\x9F\x87\xA9\xF0\x9F\x87\xAA E0.6 flag: Germany\n"
    "1F1EB 1F1F7                                            ; fully-qualified     # \xF0\x9F\x87\xAB\xF0\x9F\x87\xB7 E0.6 flag: France\n"
    "\n"
    "# subgroup: subdivision-flag\n"
    "1F3F4 E0067 E0062 E0065 E006E E0067 E007F              ; fully-qualified     # \xF0\x9F\x8F\xB4\xF3\xA0\x81\xA7\xF3\xA0\x81\xA2\xF3\xA0\x81\xA5\xF3\xA0\x81\xAE\xF3\xA0\x81\xA7\xF3\xA0\x81\xBF E5.0 flag: England\n"
    "\n"
    "# group: Component\n"
    "\n"
    "# subgroup: skin-tone\n"
    "1F3FB                                                  ; component           # \xF0\x9F\x8F\xBB E1.0 light skin tone\n"
    "1F3FC                                                  ; component           # \xF0\x9F\x8F\xBC E1.0 medium-light skin tone\n";

inline emojivec::EmojiCatalog fixture_catalog() {
    std::istringstream in(kCatalogFixture);
    return emojivec::parse_emoji_catalog(in);
}

inline emojivec::EmojiKey key(std::initializer_list<char32_t> cps) {
    return emojivec::EmojiKey(std::u32string(cps));
}

// Random store with both emoji-looking and word keys.
inline emojivec::KeyedVectors random_store(std::mt19937& rng, size_t n_words, size_t n_emoji,
                                           size_t dim) {
    std::vector<std::string> keys;
    std::vector<float> data;
    std::vector<uint64_t> dfs;
    std::uniform_real_distribution<float> val(-1.0f, 1.0f);
    std::uniform_int_distribution<uint64_t> df(0, 1000);
    for (size_t i = 0; i < n_words; ++i) keys.push_back("word" + std::to_string(i));
    for (size_t i = 0; i < n_emoji; ++i)
        keys.push_back(emojivec::utf8::encode(std::u32string(1, char32_t(0x1F400 + i))));
    for (size_t i = 0; i < keys.size(); ++i) {
        dfs.push_back(df(rng));
        for (size_t j = 0; j < dim; ++j) data.push_back(val(rng));
    }
    return emojivec::KeyedVectors(std::move(keys), std::move(data), dim, std::move(dfs));
}

class TempDir {
  public:
    TempDir() {
        auto base = std::filesystem::temp_directory_path();
        static std::atomic<int> counter{0};
        path_ = base / ("emojivec-test-" + std::to_string(::getpid()) + "-" +
                        std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::filesystem::path path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

  private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace testutil
