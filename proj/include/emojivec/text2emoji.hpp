#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "emojivec/assoc_eval.hpp"
#include "emojivec/classifier.hpp"
#include "emojivec/confusion.hpp"
#include "emojivec/emoji.hpp"
#include "emojivec/error.hpp"
#include "emojivec/keyed_vectors.hpp"
#include "emojivec/rng.hpp"
#include "emojivec/sgns.hpp"
#include "emojivec/vocab.hpp"

namespace emojivec {

// One prediction instance: the sentence's words with every emoji masked out,
// labeled by the first emoji that occurred.
struct TaskInstance {
    std::vector<std::string> sentence; // full token sentence, kept for fold training
    std::vector<std::string> words;    // emoji-masked feature words
    std::string label;                 // first emoji of the sentence
};

// Classes are the emojis whose share of all emoji occurrences exceeds the
// threshold, ordered by descending count.
inline std::vector<std::string>
select_classes(const std::unordered_map<EmojiKey, uint64_t, EmojiKeyHash>& emoji_counts,
               double share_threshold) {
    if (!(share_threshold > 0.0 && share_threshold < 1.0))
        fail(errc::domain, "share threshold must be in (0, 1)");
    uint64_t total = 0;
    for (const auto& [k, c] : emoji_counts) total += c;
    std::vector<std::pair<std::string, uint64_t>> picked;
    for (const auto& [k, c] : emoji_counts)
        if (double(c) / double(total) > share_threshold) picked.emplace_back(k.utf8(), c);
    if (picked.empty()) fail(errc::degenerate, "no emoji above the usage-share threshold");
    std::sort(picked.begin(), picked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    std::vector<std::string> out;
    out.reserve(picked.size());
    for (auto& [k, c] : picked) out.push_back(std::move(k));
    return out;
}

// Sentences whose first emoji is one of the classes become instances; all
// emoji tokens are stripped from the feature words.
inline std::vector<TaskInstance> extract_instances(const TokenCorpus& corpus,
                                                   const std::vector<std::string>& classes) {
    if (classes.empty()) fail(errc::config, "class list is empty");
    std::unordered_set<std::string> class_set(classes.begin(), classes.end());
    std::vector<TaskInstance> out;
    for (const auto& sent : corpus) {
        std::string first;
        std::vector<std::string> words;
        for (const auto& tok : sent) {
            if (is_emoji_key_string(tok)) {
                if (first.empty()) first = tok;
            } else {
                words.push_back(tok);
            }
        }
        if (first.empty() || !class_set.contains(first) || words.empty()) continue;
        out.push_back({sent, std::move(words), std::move(first)});
    }
    return out;
}

struct BalancedDataset {
    std::vector<std::string> classes;
    size_t per_class = 0;
    std::vector<TaskInstance> instances; // grouped by class, per_class each
    std::vector<int32_t> class_of;       // class index per instance
};

struct FoldPlan {
    std::vector<std::vector<size_t>> folds; // instance indices, disjoint, covering
};

// Seeded uniform subsample of per_class instances per class, dealt round-robin
// into folds so per-class fold sizes differ by at most one.
inline std::pair<BalancedDataset, FoldPlan>
balance_and_fold(const std::vector<TaskInstance>& instances, const std::vector<std::string>& classes,
                 size_t per_class, size_t n_folds, uint64_t seed) {
    if (n_folds < 1) fail(errc::config, "need at least one fold");
    std::unordered_map<std::string, int32_t> class_idx;
    for (size_t i = 0; i < classes.size(); ++i) class_idx.emplace(classes[i], int32_t(i));

    std::vector<std::vector<size_t>> buckets(classes.size());
    for (size_t i = 0; i < instances.size(); ++i) {
        auto it = class_idx.find(instances[i].label);
        if (it != class_idx.end()) buckets[size_t(it->second)].push_back(i);
    }
    if (per_class == 0) {
        per_class = SIZE_MAX;
        for (const auto& b : buckets) per_class = std::min(per_class, b.size());
        if (per_class == 0 || per_class == SIZE_MAX) {
            for (size_t c = 0; c < buckets.size(); ++c)
                if (buckets[c].empty())
                    fail(errc::degenerate, "class has no instances: " + classes[c]);
        }
    }
    for (size_t c = 0; c < buckets.size(); ++c)
        if (buckets[c].size() < per_class)
            fail(errc::degenerate, "class " + classes[c] + " has only " +
                                       std::to_string(buckets[c].size()) + " instances, need " +
                                       std::to_string(per_class));

    BalancedDataset data;
    data.classes = classes;
    data.per_class = per_class;
    FoldPlan plan;
    plan.folds.resize(n_folds);
    for (size_t c = 0; c < buckets.size(); ++c) {
        Rng rng(derive_seed(seed, 0xBA7A + c));
        rng.shuffle(buckets[c].data(), buckets[c].size());
        for (size_t j = 0; j < per_class; ++j) {
            plan.folds[j % n_folds].push_back(data.instances.size());
            data.instances.push_back(instances[buckets[c][j]]);
            data.class_of.push_back(int32_t(c));
        }
    }
    return {std::move(data), std::move(plan)};
}

// Mean of the in-vocabulary word vectors.
inline std::vector<float> sentence_vector(const KeyedVectors& store,
                                          const std::vector<std::string>& words) {
    std::vector<float> acc(store.dim(), 0.0f);
    size_t used = 0;
    for (const auto& w : words) {
        int64_t i = store.resolve(w);
        if (i < 0) continue;
        auto r = store.row(size_t(i));
        for (size_t j = 0; j < acc.size(); ++j) acc[j] += r[j];
        ++used;
    }
    if (used == 0) fail(errc::degenerate, "all words out of vocabulary");
    for (auto& v : acc) v /= float(used);
    return acc;
}

// Success probability of k uniform guesses without replacement among n
// balanced classes: p(n,k) = p(n,k-1) + (1 - p(n,k-1)) / (n-k), p(n,0) = 1/n.
// zeror_topk(n, k) returns p(n, k-1), i.e. top-1 is p(n, 0).
inline double zeror_topk(size_t n, size_t k) {
    if (n == 0 || k == 0 || k > n) fail(errc::domain, "zeror_topk needs 1 <= k <= n");
    double p = 1.0 / double(n);
    for (size_t j = 1; j < k; ++j) p = p + (1.0 - p) / double(n - j);
    return p;
}

// Closed form of the same quantity, kept as an independent cross-check.
inline double zeror_topk_closed(size_t n, size_t k) {
    if (n == 0 || k == 0 || k > n) fail(errc::domain, "zeror_topk needs 1 <= k <= n");
    return double(k) / double(n);
}

// Ranks the class emojis by cosine against the feature vector.
inline std::vector<std::string> naive_predict(const KeyedVectors& store,
                                              std::span<const float> feature,
                                              const std::vector<std::string>& classes, size_t k) {
    double fnorm = 0.0;
    for (float v : feature) fnorm += double(v) * double(v);
    fnorm = std::sqrt(fnorm);
    if (fnorm == 0.0) fail(errc::degenerate, "zero feature vector");
    std::vector<std::pair<double, size_t>> scored;
    scored.reserve(classes.size());
    for (size_t c = 0; c < classes.size(); ++c) {
        int64_t row = store.resolve(classes[c]);
        if (row < 0) fail(errc::not_found, "class emoji missing from embedding: " + classes[c]);
        auto r = store.row(size_t(row));
        double dot = 0.0, norm = 0.0;
        for (size_t j = 0; j < r.size(); ++j) {
            dot += double(feature[j]) * double(r[j]);
            norm += double(r[j]) * double(r[j]);
        }
        if (norm == 0.0) fail(errc::degenerate, "zero vector for class emoji " + classes[c]);
        scored.emplace_back(dot / (fnorm * std::sqrt(norm)), c);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<std::string> out;
    out.reserve(std::min(k, scored.size()));
    for (size_t i = 0; i < scored.size() && i < k; ++i) out.push_back(classes[scored[i].second]);
    return out;
}

struct FoldPredictions {
    std::vector<std::vector<std::string>> ranked; // per instance, best first
    std::vector<std::string> labels;
};

struct TopkAccuracy {
    std::vector<double> mean;                 // index k-1
    std::vector<double> stddev;               // population std across folds
    std::vector<std::vector<double>> per_fold;
};

inline TopkAccuracy evaluate_topk(const std::vector<FoldPredictions>& folds, size_t k_max = 5) {
    if (folds.empty() || k_max == 0) fail(errc::config, "nothing to evaluate");
    TopkAccuracy res;
    res.per_fold.resize(folds.size());
    for (size_t f = 0; f < folds.size(); ++f) {
        const auto& fp = folds[f];
        if (fp.ranked.size() != fp.labels.size())
            fail(errc::config, "predictions/labels length mismatch");
        std::vector<size_t> hits(k_max, 0);
        for (size_t i = 0; i < fp.ranked.size(); ++i) {
            if (fp.ranked[i].size() < k_max)
                fail(errc::domain, "prediction list shorter than k_max");
            for (size_t k = 0; k < k_max; ++k) {
                if (fp.ranked[i][k] == fp.labels[i]) {
                    for (size_t k2 = k; k2 < k_max; ++k2) ++hits[k2];
                    break;
                }
            }
        }
        res.per_fold[f].resize(k_max);
        for (size_t k = 0; k < k_max; ++k)
            res.per_fold[f][k] = fp.labels.empty() ? 0.0 : double(hits[k]) / double(fp.labels.size());
    }
    res.mean.assign(k_max, 0.0);
    res.stddev.assign(k_max, 0.0);
    for (size_t k = 0; k < k_max; ++k) {
        double m = 0.0;
        for (const auto& pf : res.per_fold) m += pf[k];
        m /= double(folds.size());
        double var = 0.0;
        for (const auto& pf : res.per_fold) var += (pf[k] - m) * (pf[k] - m);
        res.mean[k] = m;
        res.stddev[k] = std::sqrt(var / double(folds.size()));
    }
    return res;
}

// Confusion between the Unicode groups of true and top-1 predicted emoji.
inline ConfusionMatrix prediction_group_confusion(const std::vector<std::string>& top1,
                                                  const std::vector<std::string>& labels,
                                                  const EmojiCatalog& catalog, GroupLevel level,
                                                  std::vector<std::string> label_order = {}) {
    if (top1.size() != labels.size()) fail(errc::config, "predictions/labels length mismatch");
    auto group_label = [&](const std::string& key) {
        auto [g, s] = catalog.group_of(normalize_emoji_utf8(key));
        return level == GroupLevel::group ? g : s;
    };
    std::vector<std::pair<std::string, std::string>> pairs;
    std::vector<std::string> needed;
    std::unordered_set<std::string> seen;
    auto note = [&](const std::string& l) {
        if (seen.insert(l).second) needed.push_back(l);
    };
    for (size_t i = 0; i < top1.size(); ++i) {
        std::string lt = group_label(labels[i]);
        std::string lp = group_label(top1[i]);
        note(lt);
        note(lp);
        pairs.emplace_back(std::move(lt), std::move(lp));
    }
    if (label_order.empty()) label_order = collect_group_labels(catalog, level, needed);
    ConfusionMatrix m(std::move(label_order));
    for (const auto& [t, p] : pairs) m.add(t, p);
    return m;
}

struct BenchmarkConfig {
    size_t folds = 5;
    size_t k_max = 5;
    TrainConfig fold_train;        // continuation on the base embedding
    ClassifierConfig softmax_cfg;  // kind forced to softmax
    ClassifierConfig mlp_cfg;      // kind forced to mlp
    bool run_naive = true;
    bool run_softmax = true;
    bool run_mlp = true;
    uint64_t seed = 1;
    GroupLevel confusion_level = GroupLevel::group;
};

struct BenchmarkMethodRow {
    std::string method;
    std::vector<double> mean;
    std::vector<double> stddev;
};

struct BenchmarkResult {
    std::vector<std::string> classes;
    size_t per_class = 0;
    size_t k_max = 5;
    std::vector<BenchmarkMethodRow> rows; // zeror first, then the run methods
    std::string best_ml_method;
    std::vector<std::string> confusion_labels;
    ConfusionMatrix naive_confusion; // pooled top-1 over all folds
    ConfusionMatrix ml_confusion;    // best ML, same label order
    std::vector<double> difference;  // normalized(naive) - normalized(best ML)
    size_t dropped_train_oov = 0;
    size_t dropped_eval_oov = 0;
};

// Full cross-validated benchmark: per fold, continue the base embedding on the
// other folds' sentences, featurize, then evaluate the naive ranking and the
// classifiers on the held-out fold. Sequential over folds and fully seeded.
inline BenchmarkResult run_benchmark(const Vocab& base_vocab, const EmbeddingMatrix& base_matrix,
                                     const BalancedDataset& data, const FoldPlan& plan,
                                     const EmojiCatalog& catalog, const BenchmarkConfig& cfg) {
    const size_t n_classes = data.classes.size();
    if (n_classes < 2) fail(errc::config, "need at least two classes");
    if (cfg.k_max > n_classes) fail(errc::config, "k_max exceeds class count");
    if (plan.folds.size() != cfg.folds) fail(errc::config, "fold plan does not match config");

    BenchmarkResult res;
    res.classes = data.classes;
    res.per_class = data.per_class;
    res.k_max = cfg.k_max;

    std::vector<FoldPredictions> naive_folds, softmax_folds, mlp_folds;
    std::vector<std::string> naive_top1, softmax_top1, mlp_top1, pooled_labels;

    for (size_t f = 0; f < cfg.folds; ++f) {
        TokenCorpus train_corpus;
        std::vector<size_t> train_idx, val_idx = plan.folds[f];
        for (size_t g = 0; g < cfg.folds; ++g) {
            if (g == f) continue;
            for (size_t i : plan.folds[g]) {
                train_idx.push_back(i);
                train_corpus.push_back(data.instances[i].sentence);
            }
        }

        TrainConfig fold_cfg = cfg.fold_train;
        fold_cfg.seed = derive_seed(cfg.seed, 0xF01D + f);
        auto cont = continue_train(base_vocab, base_matrix, train_corpus, fold_cfg);
        auto store = KeyedVectors::from_training(cont.vocab, cont.matrix);
        const size_t dim = store.dim();

        std::vector<double> train_x;
        std::vector<int32_t> train_y;
        for (size_t i : train_idx) {
            try {
                auto v = sentence_vector(store, data.instances[i].words);
                for (float x : v) train_x.push_back(double(x));
                train_y.push_back(data.class_of[i]);
            } catch (const error&) {
                ++res.dropped_train_oov;
            }
        }
        std::vector<std::vector<float>> val_feats;
        std::vector<std::string> val_labels;
        for (size_t i : val_idx) {
            try {
                val_feats.push_back(sentence_vector(store, data.instances[i].words));
                val_labels.push_back(data.instances[i].label);
            } catch (const error&) {
                ++res.dropped_eval_oov;
            }
        }
        pooled_labels.insert(pooled_labels.end(), val_labels.begin(), val_labels.end());

        if (cfg.run_naive) {
            FoldPredictions fp;
            fp.labels = val_labels;
            for (const auto& feat : val_feats) {
                auto ranked = naive_predict(store, feat, data.classes, cfg.k_max);
                naive_top1.push_back(ranked.front());
                fp.ranked.push_back(std::move(ranked));
            }
            naive_folds.push_back(std::move(fp));
        }

        auto run_model = [&](ClassifierKind kind, const ClassifierConfig& ccfg_in,
                             std::vector<FoldPredictions>& out_folds,
                             std::vector<std::string>& out_top1) {
            ClassifierConfig ccfg = ccfg_in;
            ccfg.kind = kind;
            ccfg.seed = derive_seed(cfg.seed, 0xC1A55 + f * 2 + (kind == ClassifierKind::mlp));
            auto model = train_classifier(kind, train_x, train_y, int(dim), int(n_classes), ccfg);
            FoldPredictions fp;
            fp.labels = val_labels;
            std::vector<double> xd(dim);
            for (const auto& feat : val_feats) {
                for (size_t j = 0; j < dim; ++j) xd[j] = double(feat[j]);
                auto probs = predict_proba(model, xd);
                std::vector<size_t> order(n_classes);
                std::iota(order.begin(), order.end(), size_t(0));
                std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
                    if (probs[a] != probs[b]) return probs[a] > probs[b];
                    return a < b;
                });
                std::vector<std::string> ranked;
                ranked.reserve(cfg.k_max);
                for (size_t k = 0; k < cfg.k_max; ++k) ranked.push_back(data.classes[order[k]]);
                out_top1.push_back(ranked.front());
                fp.ranked.push_back(std::move(ranked));
            }
            out_folds.push_back(std::move(fp));
        };
        if (cfg.run_softmax) run_model(ClassifierKind::softmax, cfg.softmax_cfg, softmax_folds, softmax_top1);
        if (cfg.run_mlp) run_model(ClassifierKind::mlp, cfg.mlp_cfg, mlp_folds, mlp_top1);
    }

    // ZeroR row is analytic: balanced classes make it uniform guessing.
    {
        BenchmarkMethodRow row{"zeror", {}, {}};
        for (size_t k = 1; k <= cfg.k_max; ++k) {
            row.mean.push_back(zeror_topk(n_classes, k));
            row.stddev.push_back(0.0);
        }
        res.rows.push_back(std::move(row));
    }
    auto push_method = [&](const std::string& name, const std::vector<FoldPredictions>& folds) {
        auto acc = evaluate_topk(folds, cfg.k_max);
        res.rows.push_back({name, acc.mean, acc.stddev});
    };
    if (cfg.run_naive) push_method("naive", naive_folds);
    if (cfg.run_softmax) push_method("softmax", softmax_folds);
    if (cfg.run_mlp) push_method("mlp", mlp_folds);

    // Pooled top-1 group confusions; difference is naive minus best ML.
    double best_top1 = -1.0;
    const std::vector<std::string>* best_top1_preds = nullptr;
    for (const auto& row : res.rows) {
        if (row.method != "softmax" && row.method != "mlp") continue;
        if (row.mean[0] > best_top1) {
            best_top1 = row.mean[0];
            res.best_ml_method = row.method;
            best_top1_preds = row.method == "softmax" ? &softmax_top1 : &mlp_top1;
        }
    }
    if (cfg.run_naive && best_top1_preds) {
        std::vector<std::string> needed;
        std::unordered_set<std::string> seen;
        auto note_groups = [&](const std::vector<std::string>& keys) {
            for (const auto& k : keys) {
                auto [g, s] = catalog.group_of(normalize_emoji_utf8(k));
                const std::string& l = cfg.confusion_level == GroupLevel::group ? g : s;
                if (seen.insert(l).second) needed.push_back(l);
            }
        };
        note_groups(pooled_labels);
        note_groups(naive_top1);
        note_groups(*best_top1_preds);
        res.confusion_labels = collect_group_labels(catalog, cfg.confusion_level, needed);
        res.naive_confusion = prediction_group_confusion(naive_top1, pooled_labels, catalog,
                                                         cfg.confusion_level, res.confusion_labels);
        res.ml_confusion = prediction_group_confusion(*best_top1_preds, pooled_labels, catalog,
                                                      cfg.confusion_level, res.confusion_labels);
        res.difference = matrix_difference(res.naive_confusion, res.ml_confusion);
    }
    return res;
}

// On-disk form of a prepared task: classes.txt with one class per line, and
// instances.tsv rows `fold<TAB>label<TAB>words<TAB>sentence` (tokens space-joined).
inline void save_prepared(const BalancedDataset& data, const FoldPlan& plan,
                          const std::string& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir + "/classes.txt", std::ios::binary);
        if (!out) fail(errc::io, "cannot write " + dir + "/classes.txt");
        for (const auto& c : data.classes) out << c << '\n';
    }
    std::vector<size_t> fold_of(data.instances.size(), 0);
    for (size_t f = 0; f < plan.folds.size(); ++f)
        for (size_t i : plan.folds[f]) fold_of[i] = f;
    std::ofstream out(dir + "/instances.tsv", std::ios::binary);
    if (!out) fail(errc::io, "cannot write " + dir + "/instances.tsv");
    auto join = [](const std::vector<std::string>& toks) {
        std::string s;
        for (const auto& t : toks) {
            if (!s.empty()) s.push_back(' ');
            s += t;
        }
        return s;
    };
    for (size_t i = 0; i < data.instances.size(); ++i)
        out << fold_of[i] << '\t' << data.instances[i].label << '\t'
            << join(data.instances[i].words) << '\t' << join(data.instances[i].sentence) << '\n';
}

inline std::pair<BalancedDataset, FoldPlan> load_prepared(const std::string& dir, size_t folds) {
    BalancedDataset data;
    {
        std::ifstream in(dir + "/classes.txt", std::ios::binary);
        if (!in) fail(errc::not_found, "cannot open " + dir + "/classes.txt");
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) data.classes.push_back(line);
        }
    }
    std::unordered_map<std::string, int32_t> class_idx;
    for (size_t i = 0; i < data.classes.size(); ++i) class_idx.emplace(data.classes[i], int32_t(i));

    FoldPlan plan;
    plan.folds.resize(folds);
    std::ifstream in(dir + "/instances.tsv", std::ios::binary);
    if (!in) fail(errc::not_found, "cannot open " + dir + "/instances.tsv");
    std::string line;
    size_t line_no = 0;
    auto split_tokens = [](const std::string& s) {
        std::vector<std::string> toks;
        size_t p = 0;
        while (p < s.size()) {
            size_t q = s.find(' ', p);
            if (q == std::string::npos) q = s.size();
            if (q > p) toks.push_back(s.substr(p, q - p));
            p = q + 1;
        }
        return toks;
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        size_t p = 0;
        for (int f = 0; f < 3; ++f) {
            size_t q = line.find('\t', p);
            if (q == std::string::npos)
                fail(errc::format, dir + "/instances.tsv:" + std::to_string(line_no) + ": expected 4 fields");
            fields.push_back(line.substr(p, q - p));
            p = q + 1;
        }
        fields.push_back(line.substr(p));
        size_t fold = std::stoul(fields[0]);
        if (fold >= folds)
            fail(errc::format, dir + "/instances.tsv:" + std::to_string(line_no) + ": fold out of range");
        auto it = class_idx.find(fields[1]);
        if (it == class_idx.end())
            fail(errc::format, dir + "/instances.tsv:" + std::to_string(line_no) + ": unknown class");
        plan.folds[fold].push_back(data.instances.size());
        data.instances.push_back({split_tokens(fields[3]), split_tokens(fields[2]), fields[1]});
        data.class_of.push_back(it->second);
    }
    if (!data.instances.empty()) data.per_class = data.instances.size() / data.classes.size();
    return {std::move(data), std::move(plan)};
}

// Table layout: one row per method, mean and std per k.
inline void write_benchmark_csv(const BenchmarkResult& res, std::ostream& out) {
    out << "method";
    for (size_t k = 1; k <= res.k_max; ++k)
        out << ",top" << k << "_mean,top" << k << "_std";
    out << "\n";
    char buf[32];
    for (const auto& row : res.rows) {
        out << row.method;
        for (size_t k = 0; k < res.k_max; ++k) {
            std::snprintf(buf, sizeof(buf), "%.6f", row.mean[k]);
            out << ',' << buf;
            std::snprintf(buf, sizeof(buf), "%.6f", row.stddev[k]);
            out << ',' << buf;
        }
        out << "\n";
    }
}

} // namespace emojivec
