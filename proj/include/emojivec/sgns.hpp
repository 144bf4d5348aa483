#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "emojivec/error.hpp"
#include "emojivec/rng.hpp"
#include "emojivec/vocab.hpp"

namespace emojivec {

struct TrainConfig {
    int dim = 300;
    int window = 5;
    int negatives = 5;
    int epochs = 30;
    double subsample_t = 1e-5;
    double lr_initial = 0.025;
    double lr_min = 1e-4;
    uint32_t min_count = 5;
    uint64_t seed = 1;
    int workers = 1;

    void validate() const {
        if (dim < 1) fail(errc::config, "dim must be >= 1");
        if (window < 1) fail(errc::config, "window must be >= 1");
        if (negatives < 1) fail(errc::config, "negatives must be >= 1");
        if (epochs < 1) fail(errc::config, "epochs must be >= 1");
        if (!(lr_min > 0.0 && lr_min <= lr_initial)) fail(errc::config, "need 0 < lr_min <= lr_initial");
        if (!(subsample_t > 0.0 && subsample_t <= 1.0)) fail(errc::config, "need 0 < subsample_t <= 1");
        if (workers < 1) fail(errc::config, "workers must be >= 1");
    }
};

// Input rows are the published vectors; context rows exist only for training.
template <typename T> struct EmbeddingMatrixT {
    int32_t dim = 0;
    std::vector<T> input;
    std::vector<T> context;

    size_t rows() const { return dim ? input.size() / size_t(dim) : 0; }

    std::span<T> in_row(size_t i) { return {input.data() + i * size_t(dim), size_t(dim)}; }
    std::span<const T> in_row(size_t i) const { return {input.data() + i * size_t(dim), size_t(dim)}; }
    std::span<T> ctx_row(size_t i) { return {context.data() + i * size_t(dim), size_t(dim)}; }
    std::span<const T> ctx_row(size_t i) const { return {context.data() + i * size_t(dim), size_t(dim)}; }
};

using EmbeddingMatrix = EmbeddingMatrixT<float>;

// Standard word2vec subsampling rule: p = min(1, (sqrt(f/t)+1) * t/f),
// f being the token's share of all training tokens.
inline double keep_probability(const Vocab& vocab, int32_t token, double subsample_t) {
    if (token < 0 || size_t(token) >= vocab.size()) fail(errc::not_found, "token index out of range");
    double f = double(vocab.entries[token].term_count) / double(vocab.total_terms);
    double p = (std::sqrt(f / subsample_t) + 1.0) * subsample_t / f;
    return p < 1.0 ? p : 1.0;
}

inline double keep_probability(const Vocab& vocab, std::string_view token, double subsample_t) {
    int32_t i = vocab.find(token);
    if (i < 0) fail(errc::not_found, "token not in vocab: " + std::string(token));
    return keep_probability(vocab, i, subsample_t);
}

// Draws indices with probability proportional to term_count^0.75 using the
// alias method, so the sampling distribution is exact.
class NegativeSampler {
  public:
    explicit NegativeSampler(const Vocab& vocab, uint64_t seed = 0) : rng_(seed) {
        size_t n = vocab.size();
        if (n == 0) fail(errc::degenerate, "empty vocab");
        std::vector<double> w(n);
        double total = 0.0;
        for (size_t i = 0; i < n; ++i) {
            w[i] = std::pow(double(vocab.entries[i].term_count), 0.75);
            total += w[i];
        }
        prob_.resize(n);
        alias_.resize(n, 0);
        std::vector<uint32_t> small, large;
        std::vector<double> scaled(n);
        for (size_t i = 0; i < n; ++i) {
            scaled[i] = w[i] * double(n) / total;
            (scaled[i] < 1.0 ? small : large).push_back(uint32_t(i));
        }
        while (!small.empty() && !large.empty()) {
            uint32_t s = small.back();
            small.pop_back();
            uint32_t l = large.back();
            large.pop_back();
            prob_[s] = scaled[s];
            alias_[s] = l;
            scaled[l] -= 1.0 - scaled[s];
            (scaled[l] < 1.0 ? small : large).push_back(l);
        }
        for (uint32_t i : large) prob_[i] = 1.0;
        for (uint32_t i : small) prob_[i] = 1.0;
    }

    int32_t sample(Rng& rng) const {
        size_t k = size_t(rng.next_below(prob_.size()));
        return rng.next_double() < prob_[k] ? int32_t(k) : int32_t(alias_[k]);
    }

    int32_t sample() { return sample(rng_); }

  private:
    std::vector<double> prob_;
    std::vector<uint32_t> alias_;
    Rng rng_;
};

namespace detail {

// -log(sigmoid(x)), stable for large |x|.
template <typename T> T softplus_neg(T x) {
    return x > T(0) ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
}

} // namespace detail

// One gradient step on the pair objective
//   L = -log s(u_ctx . v_cen) - sum_n log s(-u_n . v_cen)
// updating the center's input row and the context/negative context rows in
// place. Returns the pre-update loss.
template <typename T>
T sgns_step(EmbeddingMatrixT<T>& m, int32_t center, int32_t context,
            std::span<const int32_t> negatives, T lr) {
    const int32_t dim = m.dim;
    std::span<T> v = m.in_row(size_t(center));
    T loss = T(0);
    thread_local std::vector<T> grad_v;
    grad_v.assign(size_t(dim), T(0));

    auto process = [&](int32_t target, bool positive) {
        std::span<T> u = m.ctx_row(size_t(target));
        T dot = T(0);
        for (int32_t j = 0; j < dim; ++j) dot += u[j] * v[j];
        loss += detail::softplus_neg(positive ? dot : -dot);
        T sig = T(1) / (T(1) + std::exp(-dot));
        T g = ((positive ? T(1) : T(0)) - sig) * lr;
        for (int32_t j = 0; j < dim; ++j) {
            grad_v[j] += g * u[j];
            u[j] += g * v[j];
        }
    };

    process(context, true);
    for (int32_t n : negatives) process(n, false);
    for (int32_t j = 0; j < dim; ++j) v[j] += grad_v[j];
    return loss;
}

struct EpochStats {
    int epoch = 0; // 1-based
    uint64_t tokens_processed = 0;
    double mean_loss = 0.0;
    double tokens_per_sec = 0.0;
};

using EpochCallback =
    std::function<void(const EpochStats&, const Vocab&, const EmbeddingMatrix&)>;

struct TrainResult {
    EmbeddingMatrix matrix;
    std::vector<double> epoch_mean_loss;
};

namespace detail {

inline void init_input_rows(EmbeddingMatrix& m, size_t first_row, size_t rows, uint64_t seed) {
    Rng rng(derive_seed(seed, 0xA11CE));
    float scale = 1.0f / float(m.dim);
    for (size_t r = first_row; r < first_row + rows; ++r)
        for (auto& x : m.in_row(r)) x = (rng.next_float() - 0.5f) * scale;
}

// Hogwild-style epoch loop. Workers share the matrices without locks; lost
// updates are tolerated. Determinism holds for workers == 1.
inline void train_loop(const std::vector<std::vector<int32_t>>& sentences, const Vocab& vocab,
                       const TrainConfig& cfg, EmbeddingMatrix& matrix,
                       std::vector<double>& epoch_mean_loss, const EpochCallback& on_epoch) {
    uint64_t corpus_tokens = 0;
    for (const auto& s : sentences) corpus_tokens += s.size();
    if (corpus_tokens == 0) fail(errc::degenerate, "training corpus is empty");

    std::vector<double> keep(vocab.size());
    for (size_t i = 0; i < vocab.size(); ++i)
        keep[i] = keep_probability(vocab, int32_t(i), cfg.subsample_t);

    NegativeSampler sampler(vocab);
    const uint64_t total_expected = corpus_tokens * uint64_t(cfg.epochs);
    std::atomic<uint64_t> processed{0};

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<double> worker_loss(size_t(cfg.workers), 0.0);
        std::vector<uint64_t> worker_pairs(size_t(cfg.workers), 0);
        auto t0 = std::chrono::steady_clock::now();

        auto run_worker = [&](int w) {
            Rng rng(derive_seed(cfg.seed, uint64_t(epoch) * uint64_t(cfg.workers) + uint64_t(w)));
            std::vector<int32_t> kept;
            std::vector<int32_t> negs;
            double loss_sum = 0.0;
            uint64_t pairs = 0;
            for (size_t si = size_t(w); si < sentences.size(); si += size_t(cfg.workers)) {
                const auto& sent = sentences[si];
                if (sent.empty()) continue;
                uint64_t done = processed.fetch_add(sent.size(), std::memory_order_relaxed);
                float lr = float(std::max(
                    cfg.lr_min, cfg.lr_initial * (1.0 - double(done) / double(total_expected))));
                kept.clear();
                for (int32_t tok : sent)
                    if (keep[size_t(tok)] >= 1.0 || rng.next_double() < keep[size_t(tok)])
                        kept.push_back(tok);
                const int n = int(kept.size());
                for (int i = 0; i < n; ++i) {
                    int b = int(rng.next_below(uint64_t(cfg.window))) + 1; // dynamic window in [1, window]
                    for (int off = -b; off <= b; ++off) {
                        int j = i + off;
                        if (off == 0 || j < 0 || j >= n) continue;
                        negs.clear();
                        for (int k = 0; k < cfg.negatives; ++k) {
                            int32_t cand = sampler.sample(rng);
                            if (cand == kept[j]) continue; // never contrast a token with itself
                            negs.push_back(cand);
                        }
                        loss_sum += double(sgns_step<float>(matrix, kept[i], kept[j],
                                                            std::span<const int32_t>(negs), lr));
                        ++pairs;
                    }
                }
            }
            worker_loss[size_t(w)] = loss_sum;
            worker_pairs[size_t(w)] = pairs;
        };

        if (cfg.workers == 1) {
            run_worker(0);
        } else {
            std::vector<std::thread> threads;
            threads.reserve(size_t(cfg.workers));
            for (int w = 0; w < cfg.workers; ++w) threads.emplace_back(run_worker, w);
            for (auto& t : threads) t.join();
        }

        double loss_sum = 0.0;
        uint64_t pairs = 0;
        for (int w = 0; w < cfg.workers; ++w) {
            loss_sum += worker_loss[size_t(w)];
            pairs += worker_pairs[size_t(w)];
        }
        double mean = pairs ? loss_sum / double(pairs) : 0.0;
        epoch_mean_loss.push_back(mean);
        if (on_epoch) {
            auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            EpochStats st;
            st.epoch = epoch + 1;
            st.tokens_processed = corpus_tokens;
            st.mean_loss = mean;
            st.tokens_per_sec = dt > 0 ? double(corpus_tokens) / dt : 0.0;
            on_epoch(st, vocab, matrix);
        }
    }

    for (float x : matrix.input)
        if (!std::isfinite(x)) fail(errc::degenerate, "non-finite entry after training");
    for (float x : matrix.context)
        if (!std::isfinite(x)) fail(errc::degenerate, "non-finite entry after training");
}

} // namespace detail

inline TrainResult train(const std::vector<std::vector<int32_t>>& sentences, const Vocab& vocab,
                         const TrainConfig& cfg, const EpochCallback& on_epoch = {}) {
    cfg.validate();
    if (vocab.size() == 0) fail(errc::degenerate, "empty vocab");
    TrainResult res;
    res.matrix.dim = cfg.dim;
    res.matrix.input.assign(vocab.size() * size_t(cfg.dim), 0.0f);
    res.matrix.context.assign(vocab.size() * size_t(cfg.dim), 0.0f);
    detail::init_input_rows(res.matrix, 0, vocab.size(), cfg.seed);
    detail::train_loop(sentences, vocab, cfg, res.matrix, res.epoch_mean_loss, on_epoch);
    return res;
}

struct ContinueResult {
    Vocab vocab;
    EmbeddingMatrix matrix;
    std::vector<double> epoch_mean_loss;
    size_t added_tokens = 0;
};

// Continues training from base weights on an extra corpus. Unseen tokens that
// meet min_count join the vocab with fresh input rows; base rows keep their
// indices so existing vectors stay addressable.
inline ContinueResult continue_train(const Vocab& base_vocab, const EmbeddingMatrix& base,
                                     const TokenCorpus& extra, const TrainConfig& cfg,
                                     const EpochCallback& on_epoch = {}) {
    cfg.validate();
    if (base.dim != cfg.dim) fail(errc::config, "base embedding dim differs from config dim");
    if (base.rows() != base_vocab.size()) fail(errc::config, "base vocab/matrix size mismatch");

    ContinueResult res;
    res.vocab = base_vocab;

    std::unordered_map<std::string, std::pair<uint64_t, uint64_t>> fresh; // term, doc
    {
        std::unordered_map<std::string, size_t> last_sentence;
        size_t sent_no = 0;
        for (const auto& sent : extra) {
            ++sent_no;
            for (const auto& tok : sent) {
                int32_t idx = res.vocab.find(tok);
                auto bump_doc = [&](uint64_t& doc) {
                    auto [it, first] = last_sentence.try_emplace(tok, sent_no);
                    if (first || it->second != sent_no) {
                        it->second = sent_no;
                        ++doc;
                    }
                };
                if (idx >= 0) {
                    ++res.vocab.entries[size_t(idx)].term_count;
                    bump_doc(res.vocab.entries[size_t(idx)].doc_count);
                } else {
                    auto& c = fresh[tok];
                    ++c.first;
                    bump_doc(c.second);
                }
            }
        }
    }
    std::vector<VocabEntry> added;
    for (auto& [key, c] : fresh)
        if (c.first >= cfg.min_count) added.push_back({key, c.first, c.second});
    std::sort(added.begin(), added.end(), [](const VocabEntry& a, const VocabEntry& b) {
        if (a.term_count != b.term_count) return a.term_count > b.term_count;
        return a.key < b.key;
    });
    res.added_tokens = added.size();
    for (auto& e : added) res.vocab.entries.push_back(std::move(e));
    res.vocab.rebuild_index();

    res.matrix.dim = cfg.dim;
    res.matrix.input = base.input;
    res.matrix.context = base.context;
    res.matrix.input.resize(res.vocab.size() * size_t(cfg.dim), 0.0f);
    res.matrix.context.resize(res.vocab.size() * size_t(cfg.dim), 0.0f);
    detail::init_input_rows(res.matrix, base_vocab.size(), res.added_tokens,
                            derive_seed(cfg.seed, 0xC0117));

    if (extra.empty()) return res; // nothing to train on: identical to base

    auto mapped = map_corpus(res.vocab, extra);
    detail::train_loop(mapped, res.vocab, cfg, res.matrix, res.epoch_mean_loss, on_epoch);
    return res;
}

} // namespace emojivec
