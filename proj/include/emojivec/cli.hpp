#pragma once

#include <CLI11.hpp>

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "emojivec/assoc_eval.hpp"
#include "emojivec/corpus.hpp"
#include "emojivec/emoji.hpp"
#include "emojivec/error.hpp"
#include "emojivec/keyed_vectors.hpp"
#include "emojivec/sgns.hpp"
#include "emojivec/text2emoji.hpp"
#include "emojivec/tsne.hpp"
#include "emojivec/vocab.hpp"

namespace emojivec::cli {

inline constexpr const char* kVersion = "0.1.0";

// Exit codes: 0 success, 2 usage, 3 missing input, 4 invariant/config
// violation, 5 malformed data, 1 anything else.
inline int exit_code_for(errc c) {
    switch (c) {
    case errc::not_found:
    case errc::io: return 3;
    case errc::config:
    case errc::domain:
    case errc::degenerate: return 4;
    case errc::format: return 5;
    }
    return 1;
}

namespace detail {

inline uint64_t fnv1a64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(errc::not_found, "cannot open " + path);
    uint64_t h = 1469598103934665603ULL;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= uint64_t(static_cast<unsigned char>(buf[i]));
            h *= 1099511628211ULL;
        }
    }
    return h;
}

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(errc::not_found, "cannot open " + path);
    return in;
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(errc::io, "cannot write " + path);
    return out;
}

inline EmojiCatalog load_catalog(const std::string& path) {
    auto in = open_input(path);
    return parse_emoji_catalog(in);
}

// Manifest: tool version, resolved configuration and input digests. No
// timestamps, so deterministic runs write identical manifests.
struct ManifestInfo {
    std::vector<std::pair<std::string, std::string>> inputs;  // label -> path
    std::vector<std::pair<std::string, std::string>> outputs; // label -> path
};

inline void write_manifest(const CLI::App* sub, const ManifestInfo& info,
                           const std::string& explicit_path, const std::string& derived_from) {
    std::string path = explicit_path;
    if (path.empty() && !derived_from.empty()) path = derived_from + ".manifest";
    std::ostringstream body;
    body << "tool = emojivec " << kVersion << "\n";
    std::vector<std::string> names;
    for (const CLI::App* a = sub; a != nullptr && a->get_parent() != nullptr; a = a->get_parent())
        names.push_back(a->get_name());
    body << "command =";
    for (auto it = names.rbegin(); it != names.rend(); ++it) body << ' ' << *it;
    body << "\n";
    body << sub->config_to_str(true, false);
    for (const auto& [label, p] : info.inputs) {
        char digest[32];
        std::snprintf(digest, sizeof(digest), "%016llx",
                      static_cast<unsigned long long>(fnv1a64_file(p)));
        body << "input." << label << ".path = " << p << "\n";
        body << "input." << label << ".fnv1a64 = " << digest << "\n";
    }
    for (const auto& [label, p] : info.outputs) body << "output." << label << " = " << p << "\n";
    if (path.empty()) {
        std::cerr << "--- run manifest ---\n" << body.str() << "--------------------\n";
    } else {
        auto out = open_output(path);
        out << body.str();
    }
}

// Vocab reconstruction for continuation from a stored embedding: only document
// counts survive serialization, so term counts fall back to them (floor 1).
inline std::pair<Vocab, EmbeddingMatrix> vocab_and_matrix_from_store(const KeyedVectors& store) {
    Vocab v;
    v.min_count = 1;
    v.entries.reserve(store.size());
    for (size_t i = 0; i < store.size(); ++i) {
        uint64_t df = store.doc_count(i);
        v.entries.push_back({store.keys()[i], df > 0 ? df : 1, df});
    }
    v.rebuild_index();
    EmbeddingMatrix m;
    m.dim = int32_t(store.dim());
    m.input.reserve(store.size() * store.dim());
    for (size_t i = 0; i < store.size(); ++i) {
        auto r = store.row(i);
        m.input.insert(m.input.end(), r.begin(), r.end());
    }
    m.context.assign(store.size() * store.dim(), 0.0f);
    return {std::move(v), std::move(m)};
}

inline EpochCallback make_epoch_logger(const std::string& checkpoint_base, int checkpoint_every) {
    return [checkpoint_base, checkpoint_every](const EpochStats& st, const Vocab& vocab,
                                               const EmbeddingMatrix& m) {
        std::fprintf(stderr, "epoch=%d tokens=%llu tokens_per_sec=%.0f mean_loss=%.6f\n", st.epoch,
                     static_cast<unsigned long long>(st.tokens_processed), st.tokens_per_sec,
                     st.mean_loss);
        if (checkpoint_every > 0 && st.epoch % checkpoint_every == 0 && !checkpoint_base.empty()) {
            auto kv = KeyedVectors::from_training(vocab, m);
            kv.save_text(checkpoint_base + ".ck" + std::to_string(st.epoch));
        }
    };
}

inline void print_csv_or_stdout(const std::string& out_path, const std::string& content) {
    if (out_path.empty()) {
        std::fwrite(content.data(), 1, content.size(), stdout);
    } else {
        auto out = open_output(out_path);
        out << content;
    }
}

inline GroupLevel parse_level(const std::string& s) {
    if (s == "group") return GroupLevel::group;
    if (s == "subgroup") return GroupLevel::subgroup;
    fail(errc::config, "level must be 'group' or 'subgroup'");
}

inline TokenCorpus load_token_corpus(const std::string& path) {
    auto in = open_input(path);
    return read_token_corpus(in);
}

inline std::string fold_vector_path(const std::string& pattern, size_t fold) {
    std::string out = pattern;
    const std::string ph = "{fold}";
    auto pos = out.find(ph);
    if (pos == std::string::npos) fail(errc::config, "--fold-vectors pattern must contain {fold}");
    out.replace(pos, ph.size(), std::to_string(fold));
    return out;
}

} // namespace detail

struct AppState {
    struct {
        std::string input, out, manifest;
    } catalog_parse;
    struct {
        std::string input, catalog, out, manifest;
    } preprocess;
    struct {
        std::string input, catalog, out, emoji_counts, manifest;
    } stats;
    struct {
        std::string input, out, manifest;
        TrainConfig cfg;
        bool deterministic = false;
        bool mask_emoji = false;
        int checkpoint_every = 0;
    } train;
    struct {
        std::string base, input, out, manifest;
        TrainConfig cfg;
        bool deterministic = false;
        int checkpoint_every = 0;
    } continue_train;
    struct {
        std::string vectors, a, b;
    } query_sim;
    struct {
        std::string vectors, emoji, out, manifest;
        size_t k = 10;
        uint64_t min_df = 100;
    } query_e2e;
    struct {
        std::string vectors, emoji, out, manifest;
        size_t k = 10;
        uint64_t min_df = 500;
    } query_e2t;
    struct {
        std::string vectors, catalog, out, manifest;
        std::string level = "group";
        uint64_t min_df = 0;
        bool counts = false;
    } eval_confusion;
    struct {
        std::string vectors, judgments, out, manifest;
        std::string col_a = "emoji1", col_b = "emoji2", col_score = "score";
    } eval_spearman;
    struct {
        std::string input, out_dir, manifest;
        double share_threshold = 1e-4;
        size_t per_class = 0;
        size_t folds = 5;
        uint64_t seed = 1;
    } t2e_prepare;
    struct {
        size_t classes = 117;
        size_t k = 5;
    } t2e_baseline;
    struct {
        std::string prepared, fold_vectors, out, manifest;
        size_t folds = 5;
        size_t k = 5;
    } t2e_naive;
    struct {
        std::string prepared, base, out_dir, manifest;
        TrainConfig cfg;
        bool deterministic = false;
        size_t folds = 5;
    } t2e_train;
    struct {
        std::string prepared, base, catalog, out_dir, manifest;
        TrainConfig fold_cfg;
        bool deterministic = false;
        uint64_t seed = 1;
        size_t folds = 5;
        size_t k = 5;
        int cls_epochs = 25;
        int cls_batch = 256;
        double cls_lr = 0.5;
        double cls_lr_decay = 1.0;
        int mlp_hidden = 100;
        bool no_naive = false, no_softmax = false, no_mlp = false;
        std::string level = "group";
        std::vector<double> grid_lr;
        std::vector<int> grid_hidden;
        std::vector<int> grid_epochs;
    } t2e_evaluate;
    struct {
        std::string vectors, catalog, out, kl_log, manifest;
        TsneConfig cfg;
        bool include_words = false;
    } project;
};

namespace detail {

inline void add_train_options(CLI::App* sub, TrainConfig& cfg, bool& deterministic) {
    sub->add_option("--dim", cfg.dim, "embedding dimensionality")->capture_default_str();
    sub->add_option("--window", cfg.window, "maximum context offset")->capture_default_str();
    sub->add_option("--negatives", cfg.negatives, "negative samples per positive")
        ->capture_default_str();
    sub->add_option("--epochs", cfg.epochs, "training epochs")->capture_default_str();
    sub->add_option("--subsample", cfg.subsample_t, "frequent-token subsampling threshold")
        ->capture_default_str();
    sub->add_option("--lr", cfg.lr_initial, "initial learning rate")->capture_default_str();
    sub->add_option("--lr-min", cfg.lr_min, "learning rate floor")->capture_default_str();
    sub->add_option("--min-count", cfg.min_count, "minimum token count")->capture_default_str();
    sub->add_option("--workers", cfg.workers, "training threads")->capture_default_str();
    sub->add_option("--seed", cfg.seed, "RNG seed")->capture_default_str();
    sub->add_flag("--deterministic", deterministic, "single-worker reproducible mode");
}

} // namespace detail

inline void build(CLI::App& app, AppState& st) {
    using namespace detail;
    app.description("word-emoji embedding toolkit");
    app.set_version_flag("--version", std::string("emojivec ") + kVersion);
    app.set_config("--config", "", "plain-text `key = value` configuration file");
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);

    // ---- catalog ----
    auto* catalog = app.add_subcommand("catalog", "emoji catalog operations");
    catalog->require_subcommand(1);
    {
        auto& o = st.catalog_parse;
        auto* sub = catalog->add_subcommand("parse", "parse an emoji-test.txt file to CSV");
        sub->add_option("--input", o.input, "emoji-test.txt file")->required();
        sub->add_option("--out", o.out, "output CSV (stdout when omitted)");
        sub->add_option("--manifest", o.manifest, "manifest path");
        sub->callback([&o, sub] {
            auto cat = load_catalog(o.input);
            std::ostringstream csv_out;
            csv_out << "key,name,group,subgroup,qualification\n";
            for (const auto& e : cat.entries())
                csv::write_row(csv_out, {e.key.utf8(), e.name, e.group, e.subgroup,
                                         qualification_name(e.qualification)});
            print_csv_or_stdout(o.out, csv_out.str());
            std::fprintf(stderr, "parsed %zu entries in %zu groups\n", cat.size(),
                         cat.group_order().size());
            write_manifest(sub, {{{"catalog", o.input}}, {{"csv", o.out.empty() ? "-" : o.out}}},
                           o.manifest, o.out);
        });
    }

    // ---- preprocess ----
    {
        auto& o = st.preprocess;
        auto* sub = app.add_subcommand("preprocess", "clean a raw corpus into token sentences");
        sub->add_option("--input", o.input, "raw corpus, one post per line (optional id<TAB>text)")
            ->required();
        sub->add_option("--catalog", o.catalog, "emoji-test.txt file")->required();
        sub->add_option("--out", o.out, "cleaned corpus output (stdout when omitted)");
        sub->add_option("--manifest", o.manifest, "manifest path");
        sub->callback([&o, sub] {
            auto cat = load_catalog(o.catalog);
            auto in = open_input(o.input);
            std::ostringstream out;
            size_t kept = 0, dropped = 0;
            process_corpus(in, cat, {},
                           [&](const RawPost&, const SegmentedText&,
                               const std::optional<CleanSentence>& cleaned) {
                               if (cleaned) {
                                   out << sentence_line(*cleaned) << '\n';
                                   ++kept;
                               } else {
                                   ++dropped;
                               }
                           });
            print_csv_or_stdout(o.out, out.str());
            std::fprintf(stderr, "kept %zu sentences, dropped %zu\n", kept, dropped);
            write_manifest(sub,
                           {{{"corpus", o.input}, {"catalog", o.catalog}},
                            {{"clean", o.out.empty() ? "-" : o.out}}},
                           o.manifest, o.out);
        });
    }

    // ---- stats ----
    {
        auto& o = st.stats;
        auto* sub = app.add_subcommand("stats", "corpus statistics");
        sub->add_option("--input", o.input, "raw corpus")->required();
        sub->add_option("--catalog", o.catalog, "emoji-test.txt file")->required();
        sub->add_option("--out", o.out, "stats CSV (stdout when omitted)");
        sub->add_option("--emoji-counts", o.emoji_counts, "write per-emoji counts CSV here");
        sub->add_option("--manifest", o.manifest, "manifest path");
        sub->callback([&o, sub] {
            auto cat = load_catalog(o.catalog);
            auto in = open_input(o.input);
            StatsAccumulator acc;
            process_corpus(in, cat, {},
                           [&](const RawPost&, const SegmentedText& seg,
                               const std::optional<CleanSentence>& cleaned) {
                               acc.add(seg, cleaned);
                           });
            auto s = acc.finalize();
            std::ostringstream csv_out;
            write_stats_csv(s, csv_out);
            print_csv_or_stdout(o.out, csv_out.str());
            std::ostringstream text;
            write_stats_text(s, text);
            std::fputs(text.str().c_str(), stderr);
            if (!o.emoji_counts.empty()) {
                std::vector<std::pair<std::string, uint64_t>> counts;
                for (const auto& [k, c] : acc.emoji_counts) counts.emplace_back(k.utf8(), c);
                std::sort(counts.begin(), counts.end(), [](const auto& a, const auto& b) {
                    if (a.second != b.second) return a.second > b.second;
                    return a.first < b.first;
                });
                auto out = open_output(o.emoji_counts);
                out << "emoji,count\n";
                for (const auto& [k, c] : counts) csv::write_row(out, {k, std::to_string(c)});
            }
            write_manifest(sub,
                           {{{"corpus", o.input}, {"catalog", o.catalog}},
                            {{"stats", o.out.empty() ? "-" : o.out}}},
                           o.manifest, o.out);
        });
    }

    // ---- train ----
    {
        auto& o = st.train;
        auto* sub = app.add_subcommand("train", "train word-emoji vectors on a cleaned corpus");
        sub->add_option("--input", o.input, "cleaned corpus (tokens space-joined per line)")
            ->required();
        sub->add_option("--out", o.out, "output vectors (word2vec text format)")->required();
        add_train_options(sub, o.cfg, o.deterministic);
        sub->add_flag("--mask-emoji", o.mask_emoji,
                      "drop emoji tokens before training (word-only base embedding)");
        sub->add_option("--checkpoint-every", o.checkpoint_every,
                        "write a checkpoint every N epochs (0 = off)")
            ->capture_default_str();
        sub->add_option("--manifest", o.manifest, "manifest path");
        sub->callback([&o, sub] {
            if (o.deterministic) o.cfg.workers = 1;
            o.cfg.validate();
            auto corpus = load_token_corpus(o.input);
            if (o.mask_emoji) {
                for (auto& sent : corpus)
                    std::erase_if(sent, [](const std::string& t) { return is_emoji_key_string(t); });
                std::erase_if(corpus, [](const std::vector<std::string>& s) { return s.empty(); });
            }
            auto vocab = build_vocab(corpus, o.cfg.min_count);
            auto mapped = map_corpus(vocab, corpus);
            auto res = train(mapped, vocab, o.cfg, make_epoch_logger(o.out, o.checkpoint_every));
            KeyedVectors::from_training(vocab, res.matrix).save_text(o.out);
            std::fprintf(stderr, "trained %zu vectors of dim %d\n", vocab.size(), o.cfg.dim);
            write_manifest(sub, {{{"corpus", o.input}}, {{"vectors", o.out}}}, o.manifest, o.out);
        });
    }

    // ---- continue-train ----
    {
        auto& o = st.continue_train;
        auto* sub = app.add_subcommand("continue-train",
                                       "continue training a stored embedding on extra sentences");
        sub->add_option("--base", o.base, "base vectors (word2vec text format)")->required();
        sub->add_option("--input", o.input, "extra cleaned corpus")->required();
        sub->add_option("--out", o.out, "output vectors")->required();
        add_train_options(sub, o.cfg, o.deterministic);
        sub->add_option("--checkpoint-every", o.checkpoint_every,
                        "write a checkpoint every N epochs (0 = off)")
            ->capture_default_str();
        sub->add_option("--manifest", o.manifest, "manifest path");
        sub->callback([&o, sub] {
            if (o.deterministic) o.cfg.workers = 1;
            o.cfg.validate();
            auto store = KeyedVectors::load_text(o.base);
            o.cfg.dim = int(store.dim());
            auto [vocab, matrix] = vocab_and_matrix_from_store(store);
            auto extra = load_token_corpus(o.input);
            auto res = continue_train(vocab, matrix, extra, o.cfg,
                                      make_epoch_logger(o.out, o.checkpoint_every));
            KeyedVectors::from_training(res.vocab, res.matrix).save_text(o.out);
            std::fprintf(stderr, "continued to %zu vectors (%zu new)\n", res.vocab.size(),
                         res.added_tokens);
            write_manifest(sub, {{{"base", o.base}, {"corpus", o.input}}, {{"vectors", o.out}}},
                           o.manifest, o.out);
        });
    }

    // ---- query ----
    auto* query = app.add_subcommand("query", "similarity queries against a vector store");
    query->require_subcommand(1);
    {
        auto& o = st.query_sim;
        auto* sub = query->add_subcommand("sim", "cosine similarity of two keys");
        sub->add_option("--vectors", o.vectors, "vector store")->required();
        sub->add_option("--a", o.a, "first key")->required();
        sub->add_option("--b", o.b, "second key")->required();
        sub->callback([&o] {
            auto store = KeyedVectors::load_text(o.vectors);
            std::printf("%.6f\n", store.cosine(o.a, o.b));
        });
    }
    auto add_query_list = [&](const char* name, const char* desc, auto& o, QueryFilter::Kind kind) {
        auto* sub = query->add_subcommand(name, desc);
        sub->add_option("--vectors", o.vectors, "vector store")->required();
        sub->add_option("--emoji", o.emoji, "query emoji")->required();
        sub->add_option("--k", o.k, "number of results")->capture_default_str();
        sub->add_option("--min-df", o.min_df, "minimum document frequency")->capture_default_str();
        sub->add_option("--out", o.out, "output CSV (stdout when omitted)");
        sub->add_option("--manifest", o.manifest, "manifest path");
        sub->callback([&o, sub, kind] {
            auto store = KeyedVectors::load_text(o.vectors);
            QueryFilter f;
            f.kind = kind;
            f.min_doc_count = o.min_df;
            auto key = normalize_emoji_utf8(o.emoji);
            auto hits = store.top_k_similar(key.utf8(), o.k, f);
            std::ostringstream out;
            out << "rank,key,similarity\n";
            char buf[32];
            for (size_t i = 0; i < hits.size(); ++i) {
                std::snprintf(buf, sizeof(buf), "%.6f", hits[i].similarity);
                csv::write_row(out, {std::to_string(i + 1), hits[i].key, buf});
            }
            print_csv_or_stdout(o.out, out.str());
            write_manifest(sub, {{{"vectors", o.vectors}}, {{"csv", o.out.empty() ? "-" : o.out}}},
                           o.manifest, o.out);
        });
    };
    add_query_list("e2e", "top-k similar emojis for an emoji", st.query_e2e,
                   QueryFilter::Kind::emoji_only);
    add_query_list("e2t", "top-k similar words for an emoji", st.query_e2t,
                   QueryFilter::Kind::word_only);

    // ---- eval ----
    auto* eval = app.add_subcommand("eval", "embedding evaluations");
    eval->require_subcommand(1);
    {
        auto& o = st.eval_confusion;
        auto* sub =
            eval->add_subcommand("confusion", "Unicode-group confusion of top-1 emoji neighbors");
        sub->add_option("--vectors", o.vectors, "vector store")->required();
        sub->add_option("--catalog", o.catalog, "emoji-test.txt file")->required();
        sub->add_option("--level", o.level, "group or subgroup")->capture_default_str();
        sub->add_option("--min-df", o.min_df, "df filter for neighbors (0 = off)")
            ->capture_default_str();
        sub->add_flag("--counts", o.counts, "emit raw counts instead of row-normalized values");
        sub->add_option("--out", o.out, "matrix CSV (stdout when omitted)");
        sub->add_option("--manifest", o.manifest, "manifest path");
        sub->callback([&o, sub] {
            auto store = KeyedVectors::load_text(o.vectors);
            auto cat = load_catalog(o.catalog);
            auto res = group_confusion(store, cat, parse_level(o.level), o.min_df);
            std::ostringstream out;
            res.matrix.write_csv(out, !o.counts);
            print_csv_or_stdout(o.out, out.str());
            std::fprintf(stderr,
                         "precision_mean=%.4f precision_std=%.4f per_emoji_accuracy=%.4f "
                         "evaluated=%zu skipped=%zu\n",
                         res.precision.mean, res.precision.stddev, res.per_emoji_accuracy,
                         res.evaluated, res.skipped);
            write_manifest(sub,
                           {{{"vectors", o.vectors}, {"catalog", o.catalog}},
                            {{"matrix", o.out.empty() ? "-" : o.out}}},
                           o.manifest, o.out);
        });
    }
    {
        auto& o = st.eval_spearman;
        auto* sub = eval->add_subcommand("spearman",
                                         "rank correlation against human similarity judgments");
        sub->add_option("--vectors", o.vectors, "vector store")->required();
        sub->add_option("--judgments", o.judgments, "judgments CSV")->required();
        sub->add_option("--col-a", o.col_a, "column with the first emoji")->capture_default_str();
        sub->add_option("--col-b", o.col_b, "column with the second emoji")->capture_default_str();
        sub->add_option("--col-score", o.col_score, "column with the human score")
            ->capture_default_str();
        sub->add_option("--out", o.out, "report path (stdout when omitted)");
        sub->add_option("--manifest", o.manifest, "manifest path");
        sub->callback([&o, sub] {
            auto store = KeyedVectors::load_text(o.vectors);
            auto in = open_input(o.judgments);
            auto judgments = load_judgments_csv(in, o.col_a, o.col_b, o.col_score);
            auto rep = spearman_correlation(store, judgments);
            char buf[128];
            std::snprintf(buf, sizeof(buf), "rho %.4f\nused_pairs %zu\nskipped_pairs %zu\n",
                          rep.rho, rep.used_pairs, rep.skipped_pairs);
            print_csv_or_stdout(o.out, buf);
            write_manifest(sub,
                           {{{"vectors", o.vectors}, {"judgments", o.judgments}},
                            {{"report", o.out.empty() ? "-" : o.out}}},
                           o.manifest, o.out);
        });
    }

    // ---- t2e ----
    auto* t2e = app.add_subcommand("t2e", "Text2Emoji first-emoji prediction benchmark");
    t2e->require_subcommand(1);
    {
        auto& o = st.t2e_prepare;
        auto* sub = t2e->add_subcommand("prepare", "build the balanced, folded task dataset");
        sub->add_option("--input", o.input, "cleaned corpus")->required();
        sub->add_option("--share-threshold", o.share_threshold,
                        "minimum usage share for a class emoji")
            ->capture_default_str();
        sub->add_option("--per-class", o.per_class, "instances per class (0 = smallest class)")
            ->capture_default_str();
        sub->add_option("--folds", o.folds, "cross-validation folds")->capture_default_str();
        sub->add_option("--seed", o.seed, "RNG seed")->capture_default_str();
        sub->add_option("--out-dir", o.out_dir, "output directory")->required();
        sub->add_option("--manifest", o.manifest, "manifest path");
        sub->callback([&o, sub] {
            auto corpus = load_token_corpus(o.input);
            std::unordered_map<EmojiKey, uint64_t, EmojiKeyHash> counts;
            for (const auto& sent : corpus)
                for (const auto& tok : sent)
                    if (is_emoji_key_string(tok)) ++counts[normalize_emoji_utf8(tok)];
            if (counts.empty()) fail(errc::degenerate, "corpus contains no emoji tokens");
            auto classes = select_classes(counts, o.share_threshold);
            auto instances = extract_instances(corpus, classes);
            auto [data, plan] = balance_and_fold(instances, classes, o.per_class, o.folds, o.seed);
            save_prepared(data, plan, o.out_dir);
            std::fprintf(stderr, "%zu classes, %zu instances per class, %zu folds\n",
                         data.classes.size(), data.per_class, o.folds);
            write_manifest(sub, {{{"corpus", o.input}}, {{"dir", o.out_dir}}}, o.manifest,
                           o.out_dir + "/prepare");
        });
    }
    {
        auto& o = st.t2e_baseline;
        auto* sub = t2e->add_subcommand("baseline", "ZeroR top-k probability for balanced classes");
        sub->add_option("--classes", o.classes, "number of classes")->capture_default_str();
        sub->add_option("--k", o.k, "guesses")->capture_default_str();
        sub->callback([&o] { std::printf("%.4f\n", zeror_topk(o.classes, o.k)); });
    }
    {
        auto& o = st.t2e_naive;
        auto* sub = t2e->add_subcommand("naive",
                                        "evaluate the direct embedding ranking on prepared folds");
        sub->add_option("--prepared", o.prepared, "prepared dataset directory")->required();
        sub->add_option("--fold-vectors", o.fold_vectors,
                        "per-fold vector store pattern containing {fold}")
            ->required();
        sub->add_option("--folds", o.folds, "fold count")->capture_default_str();
        sub->add_option("--k", o.k, "top-k depth")->capture_default_str();
        sub->add_option("--out", o.out, "results CSV (stdout when omitted)");
        sub->add_option("--manifest", o.manifest, "manifest path");
        sub->callback([&o, sub] {
            auto [data, plan] = load_prepared(o.prepared, o.folds);
            std::vector<FoldPredictions> folds;
            size_t dropped = 0;
            for (size_t f = 0; f < o.folds; ++f) {
                auto store = KeyedVectors::load_text(fold_vector_path(o.fold_vectors, f));
                FoldPredictions fp;
                for (size_t i : plan.folds[f]) {
                    try {
                        auto feat = sentence_vector(store, data.instances[i].words);
                        fp.ranked.push_back(naive_predict(store, feat, data.classes, o.k));
                        fp.labels.push_back(data.instances[i].label);
                    } catch (const error&) {
                        ++dropped;
                    }
                }
                folds.push_back(std::move(fp));
            }
            auto acc = evaluate_topk(folds, o.k);
            BenchmarkResult res;
            res.classes = data.classes;
            res.per_class = data.per_class;
            res.k_max = o.k;
            {
                BenchmarkMethodRow row{"zeror", {}, {}};
                for (size_t k = 1; k <= o.k; ++k) {
                    row.mean.push_back(zeror_topk(data.classes.size(), k));
                    row.stddev.push_back(0.0);
                }
                res.rows.push_back(std::move(row));
            }
            res.rows.push_back({"naive", acc.mean, acc.stddev});
            std::ostringstream out;
            write_benchmark_csv(res, out);
            print_csv_or_stdout(o.out, out.str());
            std::fprintf(stderr, "dropped %zu all-OOV instances\n", dropped);
            write_manifest(sub, {{}, {{"results", o.out.empty() ? "-" : o.out}}}, o.manifest,
                           o.out);
        });
    }
    {
        auto& o = st.t2e_train;
        auto* sub = t2e->add_subcommand(
            "train", "continue the base embedding once per fold (excluding that fold)");
        sub->add_option("--prepared", o.prepared, "prepared dataset directory")->required();
        sub->add_option("--base", o.base, "base vectors")->required();
        sub->add_option("--out-dir", o.out_dir, "directory for fold<k>.txt vector stores")
            ->required();
        sub->add_option("--folds", o.folds, "fold count")->capture_default_str();
        add_train_options(sub, o.cfg, o.deterministic);
        sub->add_option("--manifest", o.manifest, "manifest path");
        sub->callback([&o, sub] {
            if (o.deterministic) o.cfg.workers = 1;
            o.cfg.validate();
            auto [data, plan] = load_prepared(o.prepared, o.folds);
            auto store = KeyedVectors::load_text(o.base);
            o.cfg.dim = int(store.dim());
            auto [vocab, matrix] = vocab_and_matrix_from_store(store);
            std::filesystem::create_directories(o.out_dir);
            for (size_t f = 0; f < o.folds; ++f) {
                TokenCorpus training;
                for (size_t g = 0; g < o.folds; ++g) {
                    if (g == f) continue;
                    for (size_t i : plan.folds[g]) training.push_back(data.instances[i].sentence);
                }
                TrainConfig cfg = o.cfg;
                cfg.seed = derive_seed(o.cfg.seed, 0xF01D + f);
                auto res = continue_train(vocab, matrix, training, cfg);
                std::string path = o.out_dir + "/fold" + std::to_string(f) + ".txt";
                KeyedVectors::from_training(res.vocab, res.matrix).save_text(path);
                std::fprintf(stderr, "fold %zu: %zu vectors (%zu new)\n", f, res.vocab.size(),
                             res.added_tokens);
            }
            write_manifest(sub, {{{"base", o.base}}, {{"dir", o.out_dir}}}, o.manifest,
                           o.out_dir + "/train");
        });
    }
    {
        auto& o = st.t2e_evaluate;
        auto* sub = t2e->add_subcommand("evaluate", "full benchmark: naive and learned predictors");
        sub->add_option("--prepared", o.prepared, "prepared dataset directory")->required();
        sub->add_option("--base", o.base, "base vectors")->required();
        sub->add_option("--catalog", o.catalog, "emoji-test.txt file (for group confusions)")
            ->required();
        sub->add_option("--out-dir", o.out_dir, "output directory")->required();
        sub->add_option("--folds", o.folds, "fold count")->capture_default_str();
        sub->add_option("--k", o.k, "top-k depth")->capture_default_str();
        add_train_options(sub, o.fold_cfg, o.deterministic);
        sub->add_option("--cls-epochs", o.cls_epochs, "classifier epochs")->capture_default_str();
        sub->add_option("--cls-batch", o.cls_batch, "classifier batch size")->capture_default_str();
        sub->add_option("--cls-lr", o.cls_lr, "classifier learning rate")->capture_default_str();
        sub->add_option("--cls-lr-decay", o.cls_lr_decay, "per-epoch learning rate multiplier")
            ->capture_default_str();
        sub->add_option("--mlp-hidden", o.mlp_hidden, "MLP hidden width")->capture_default_str();
        sub->add_flag("--no-naive", o.no_naive, "skip the naive method");
        sub->add_flag("--no-softmax", o.no_softmax, "skip softmax regression");
        sub->add_flag("--no-mlp", o.no_mlp, "skip the MLP");
        sub->add_option("--level", o.level, "confusion level: group or subgroup")
            ->capture_default_str();
        sub->add_option("--grid-lr", o.grid_lr, "grid-search learning rates")->delimiter(',');
        sub->add_option("--grid-hidden", o.grid_hidden, "grid-search hidden widths")
            ->delimiter(',');
        sub->add_option("--grid-epochs", o.grid_epochs, "grid-search epoch counts")
            ->delimiter(',');
        sub->add_option("--bench-seed", o.seed, "benchmark seed (classifiers, fold training)")
            ->capture_default_str();
        sub->add_option("--manifest", o.manifest, "manifest path");
        sub->callback([&o, sub] {
            if (o.deterministic) o.fold_cfg.workers = 1;
            o.fold_cfg.validate();
            auto [data, plan] = load_prepared(o.prepared, o.folds);
            auto store = KeyedVectors::load_text(o.base);
            auto cat = load_catalog(o.catalog);
            o.fold_cfg.dim = int(store.dim());
            auto [vocab, matrix] = vocab_and_matrix_from_store(store);

            BenchmarkConfig cfg;
            cfg.folds = o.folds;
            cfg.k_max = o.k;
            cfg.fold_train = o.fold_cfg;
            cfg.seed = o.seed;
            cfg.run_naive = !o.no_naive;
            cfg.run_softmax = !o.no_softmax;
            cfg.run_mlp = !o.no_mlp;
            cfg.confusion_level = parse_level(o.level);
            cfg.softmax_cfg.epochs = o.cls_epochs;
            cfg.softmax_cfg.batch_size = o.cls_batch;
            cfg.softmax_cfg.lr = o.cls_lr;
            cfg.softmax_cfg.lr_decay = o.cls_lr_decay;
            cfg.mlp_cfg = cfg.softmax_cfg;
            cfg.mlp_cfg.hidden = o.mlp_hidden;

            if (!o.grid_lr.empty() || !o.grid_hidden.empty() || !o.grid_epochs.empty()) {
                // tune on the first fold's training split before the real run
                TokenCorpus training;
                for (size_t g = 1; g < o.folds; ++g)
                    for (size_t i : plan.folds[g]) training.push_back(data.instances[i].sentence);
                TrainConfig tune_cfg = o.fold_cfg;
                tune_cfg.seed = derive_seed(o.seed, 0xF01D);
                auto cont = continue_train(vocab, matrix, training, tune_cfg);
                auto tune_store = KeyedVectors::from_training(cont.vocab, cont.matrix);
                std::vector<double> x;
                std::vector<int32_t> y;
                for (size_t g = 1; g < o.folds; ++g)
                    for (size_t i : plan.folds[g]) {
                        try {
                            auto v = sentence_vector(tune_store, data.instances[i].words);
                            for (float val : v) x.push_back(double(val));
                            y.push_back(data.class_of[i]);
                        } catch (const error&) {
                        }
                    }
                if (cfg.run_softmax) {
                    auto gs = grid_search_classifier(
                        ClassifierKind::softmax, x, y, int(tune_store.dim()),
                        int(data.classes.size()), cfg.softmax_cfg, o.grid_lr, {}, o.grid_epochs);
                    cfg.softmax_cfg = gs.best;
                    std::fprintf(stderr, "softmax grid pick: lr=%g epochs=%d (acc %.4f)\n",
                                 gs.best.lr, gs.best.epochs, gs.best_accuracy);
                }
                if (cfg.run_mlp) {
                    auto gs = grid_search_classifier(
                        ClassifierKind::mlp, x, y, int(tune_store.dim()), int(data.classes.size()),
                        cfg.mlp_cfg, o.grid_lr, o.grid_hidden, o.grid_epochs);
                    cfg.mlp_cfg = gs.best;
                    std::fprintf(stderr, "mlp grid pick: lr=%g hidden=%d epochs=%d (acc %.4f)\n",
                                 gs.best.lr, gs.best.hidden, gs.best.epochs, gs.best_accuracy);
                }
            }

            auto res = run_benchmark(vocab, matrix, data, plan, cat, cfg);
            std::filesystem::create_directories(o.out_dir);
            {
                auto out = open_output(o.out_dir + "/results.csv");
                write_benchmark_csv(res, out);
            }
            if (!res.confusion_labels.empty()) {
                {
                    auto out = open_output(o.out_dir + "/confusion_naive.csv");
                    res.naive_confusion.write_csv(out);
                }
                {
                    auto out = open_output(o.out_dir + "/confusion_ml.csv");
                    res.ml_confusion.write_csv(out);
                }
                {
                    auto out = open_output(o.out_dir + "/confusion_diff.csv");
                    write_matrix_csv(out, res.confusion_labels, res.difference);
                }
            }
            {
                // key-value run report: seed, configuration knobs, class list
                // and drop counts, next to the CSV artifacts
                auto out = open_output(o.out_dir + "/run_report.txt");
                out << "seed " << o.seed << "\n"
                    << "folds " << o.folds << "\n"
                    << "k " << o.k << "\n"
                    << "per_class " << res.per_class << "\n"
                    << "fold_epochs " << cfg.fold_train.epochs << "\n"
                    << "classifier_epochs " << cfg.softmax_cfg.epochs << "\n"
                    << "classes";
                for (const auto& c : res.classes) out << ' ' << c;
                out << "\n"
                    << "dropped_train_oov " << res.dropped_train_oov << "\n"
                    << "dropped_eval_oov " << res.dropped_eval_oov << "\n"
                    << "best_ml " << res.best_ml_method << "\n";
            }
            for (const auto& row : res.rows)
                std::fprintf(stderr, "%s top1 %.4f +- %.4f\n", row.method.c_str(), row.mean[0],
                             row.stddev[0]);
            std::fprintf(stderr, "dropped OOV: train %zu, eval %zu\n", res.dropped_train_oov,
                         res.dropped_eval_oov);
            write_manifest(sub, {{{"base", o.base}, {"catalog", o.catalog}}, {{"dir", o.out_dir}}},
                           o.manifest, o.out_dir + "/evaluate");
        });
    }

    // ---- project ----
    {
        auto& o = st.project;
        auto* sub = app.add_subcommand("project", "2D t-SNE map of the emoji vectors");
        sub->add_option("--vectors", o.vectors, "vector store")->required();
        sub->add_option("--catalog", o.catalog, "emoji-test.txt file")->required();
        sub->add_option("--perplexity", o.cfg.perplexity, "target perplexity")
            ->capture_default_str();
        sub->add_option("--iterations", o.cfg.iterations, "gradient iterations")
            ->capture_default_str();
        sub->add_option("--tsne-lr", o.cfg.learning_rate, "t-SNE learning rate")
            ->capture_default_str();
        sub->add_option("--exaggeration", o.cfg.early_exaggeration, "early exaggeration factor")
            ->capture_default_str();
        sub->add_option("--exaggeration-iters", o.cfg.exaggeration_iters,
                        "iterations under exaggeration")
            ->capture_default_str();
        sub->add_option("--momentum-switch", o.cfg.momentum_switch_iter,
                        "iteration switching momentum 0.5 to 0.8")
            ->capture_default_str();
        sub->add_option("--seed", o.cfg.seed, "RNG seed")->capture_default_str();
        sub->add_flag("--include-words", o.include_words, "project word keys too");
        sub->add_option("--out", o.out, "map CSV (stdout when omitted)");
        sub->add_option("--kl-log", o.kl_log, "per-iteration KL divergence CSV");
        sub->add_option("--manifest", o.manifest, "manifest path");
        sub->callback([&o, sub] {
            auto store = KeyedVectors::load_text(o.vectors);
            auto cat = load_catalog(o.catalog);
            std::vector<size_t> rows;
            for (size_t i = 0; i < store.size(); ++i)
                if (o.include_words || store.kind(i) == KeyKind::emoji) rows.push_back(i);
            if (rows.size() < 4) fail(errc::degenerate, "fewer than 4 keys to project");
            std::vector<double> x;
            x.reserve(rows.size() * store.dim());
            std::vector<std::string> keys;
            for (size_t i : rows) {
                for (float v : store.row(i)) x.push_back(double(v));
                keys.push_back(store.keys()[i]);
            }
            auto run = tsne(x, rows.size(), store.dim(), o.cfg);
            run.keys = std::move(keys);
            std::ostringstream out;
            export_map(run, cat, out);
            print_csv_or_stdout(o.out, out.str());
            if (!o.kl_log.empty()) {
                auto kl = open_output(o.kl_log);
                write_kl_log(run, kl);
            }
            std::fprintf(stderr, "projected %zu keys, initial KL %.4f, final KL %.4f\n",
                         rows.size(), run.initial_kl, run.final_kl);
            write_manifest(sub,
                           {{{"vectors", o.vectors}, {"catalog", o.catalog}},
                            {{"map", o.out.empty() ? "-" : o.out}}},
                           o.manifest, o.out);
        });
    }

    // Blanket env-var overrides: EMOJIVEC_<SUBCOMMANDS>_<OPTION>.
    auto apply_env = [](auto&& self, CLI::App* node, const std::string& prefix) -> void {
        for (auto* opt : node->get_options()) {
            std::string name = opt->get_single_name();
            if (name.empty() || name == "help" || name == "version" || name == "config") continue;
            std::string env = prefix + name;
            for (auto& c : env) {
                if (c == '-' || c == '.') c = '_';
                c = char(std::toupper(static_cast<unsigned char>(c)));
            }
            if (opt->get_envname().empty()) opt->envname(env);
        }
        for (auto* sub : node->get_subcommands([](const CLI::App*) { return true; }))
            self(self, sub, prefix + sub->get_name() + "_");
    };
    apply_env(apply_env, &app, "EMOJIVEC_");
}

inline int run(int argc, char** argv) {
    AppState st;
    CLI::App app{"", "emojivec"};
    build(app, st);
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: usage: " << e.what() << "\n";
        return 2;
    } catch (const error& e) {
        std::cerr << "error: " << errc_name(e.code()) << ": " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

} // namespace emojivec::cli
