#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "emojivec/error.hpp"
#include "emojivec/rng.hpp"

namespace emojivec {

enum class ClassifierKind { softmax, mlp };

struct ClassifierConfig {
    ClassifierKind kind = ClassifierKind::softmax;
    int epochs = 25;
    int batch_size = 256;
    double lr = 0.5;
    double lr_decay = 1.0; // per-epoch multiplier
    int hidden = 100;      // mlp only
    uint64_t seed = 1;

    void validate() const {
        if (epochs < 0) fail(errc::config, "epochs must be >= 0");
        if (batch_size < 1) fail(errc::config, "batch_size must be >= 1");
        if (!(lr > 0.0)) fail(errc::config, "lr must be > 0");
        if (!(lr_decay > 0.0)) fail(errc::config, "lr_decay must be > 0");
        if (hidden < 1) fail(errc::config, "hidden must be >= 1");
    }
};

// Multinomial logistic regression, optionally with one rectified-linear hidden
// layer. Output weights start at zero so an untrained model predicts the
// uniform distribution.
struct ClassifierModel {
    ClassifierKind kind = ClassifierKind::softmax;
    int in_dim = 0;
    int n_classes = 0;
    int hidden = 0;              // 0 for softmax
    std::vector<double> w1, b1;  // softmax: K x D, K.  mlp: H x D, H
    std::vector<double> w2, b2;  // mlp only: K x H, K

    size_t param_count() const { return w1.size() + b1.size() + w2.size() + b2.size(); }
};

inline ClassifierModel init_classifier(ClassifierKind kind, int in_dim, int n_classes,
                                       const ClassifierConfig& cfg) {
    if (in_dim < 1 || n_classes < 2) fail(errc::config, "classifier needs in_dim >= 1, classes >= 2");
    ClassifierModel m;
    m.kind = kind;
    m.in_dim = in_dim;
    m.n_classes = n_classes;
    if (kind == ClassifierKind::softmax) {
        m.w1.assign(size_t(n_classes) * size_t(in_dim), 0.0);
        m.b1.assign(size_t(n_classes), 0.0);
    } else {
        m.hidden = cfg.hidden;
        m.w1.assign(size_t(m.hidden) * size_t(in_dim), 0.0);
        m.b1.assign(size_t(m.hidden), 0.0);
        m.w2.assign(size_t(n_classes) * size_t(m.hidden), 0.0);
        m.b2.assign(size_t(n_classes), 0.0);
        Rng rng(derive_seed(cfg.seed, 0x31337));
        double scale = std::sqrt(6.0 / double(in_dim + m.hidden));
        for (auto& w : m.w1) w = (rng.next_double() * 2.0 - 1.0) * scale;
    }
    return m;
}

namespace detail {

inline void softmax_inplace(std::span<double> z) {
    double zmax = z[0];
    for (double v : z) zmax = std::max(zmax, v);
    double sum = 0.0;
    for (auto& v : z) {
        v = std::exp(v - zmax);
        sum += v;
    }
    for (auto& v : z) v /= sum;
}

inline void forward_hidden(const ClassifierModel& m, std::span<const double> x,
                           std::span<double> h) {
    for (int i = 0; i < m.hidden; ++i) {
        const double* w = m.w1.data() + size_t(i) * size_t(m.in_dim);
        double s = m.b1[size_t(i)];
        for (int j = 0; j < m.in_dim; ++j) s += w[j] * x[size_t(j)];
        h[size_t(i)] = s > 0.0 ? s : 0.0;
    }
}

inline void forward_logits(const ClassifierModel& m, std::span<const double> x,
                           std::span<double> h_buf, std::span<double> z) {
    if (m.kind == ClassifierKind::softmax) {
        for (int k = 0; k < m.n_classes; ++k) {
            const double* w = m.w1.data() + size_t(k) * size_t(m.in_dim);
            double s = m.b1[size_t(k)];
            for (int j = 0; j < m.in_dim; ++j) s += w[j] * x[size_t(j)];
            z[size_t(k)] = s;
        }
    } else {
        forward_hidden(m, x, h_buf);
        for (int k = 0; k < m.n_classes; ++k) {
            const double* w = m.w2.data() + size_t(k) * size_t(m.hidden);
            double s = m.b2[size_t(k)];
            for (int i = 0; i < m.hidden; ++i) s += w[i] * h_buf[size_t(i)];
            z[size_t(k)] = s;
        }
    }
}

} // namespace detail

inline std::vector<double> predict_proba(const ClassifierModel& m, std::span<const double> x) {
    if (int(x.size()) != m.in_dim) fail(errc::config, "feature dim does not match model");
    std::vector<double> h(size_t(std::max(m.hidden, 1)));
    std::vector<double> z(size_t(m.n_classes));
    detail::forward_logits(m, x, h, z);
    detail::softmax_inplace(z);
    return z;
}

struct ClassifierGrad {
    std::vector<double> w1, b1, w2, b2;

    explicit ClassifierGrad(const ClassifierModel& m)
        : w1(m.w1.size(), 0.0), b1(m.b1.size(), 0.0), w2(m.w2.size(), 0.0), b2(m.b2.size(), 0.0) {}
};

// Mean cross-entropy over the batch plus parameter gradients. Kept separate
// from the update so the gradients can be checked by finite differences.
inline double classifier_loss_grad(const ClassifierModel& m, std::span<const double> X,
                                   std::span<const int32_t> y, ClassifierGrad* grad = nullptr) {
    const size_t n = y.size();
    if (n == 0 || X.size() != n * size_t(m.in_dim)) fail(errc::config, "bad batch shape");
    std::vector<double> h(size_t(std::max(m.hidden, 1)));
    std::vector<double> z(size_t(m.n_classes));
    double loss = 0.0;
    const double inv_n = 1.0 / double(n);
    for (size_t s = 0; s < n; ++s) {
        std::span<const double> x = X.subspan(s * size_t(m.in_dim), size_t(m.in_dim));
        detail::forward_logits(m, x, h, z);
        detail::softmax_inplace(z);
        double p = std::max(z[size_t(y[s])], 1e-300);
        loss -= std::log(p) * inv_n;
        if (!grad) continue;
        // delta_k = (p_k - 1[k==y]) / n
        for (int k = 0; k < m.n_classes; ++k) {
            double d = (z[size_t(k)] - (int32_t(k) == y[s] ? 1.0 : 0.0)) * inv_n;
            if (m.kind == ClassifierKind::softmax) {
                double* gw = grad->w1.data() + size_t(k) * size_t(m.in_dim);
                for (int j = 0; j < m.in_dim; ++j) gw[j] += d * x[size_t(j)];
                grad->b1[size_t(k)] += d;
            } else {
                double* gw = grad->w2.data() + size_t(k) * size_t(m.hidden);
                for (int i = 0; i < m.hidden; ++i) gw[i] += d * h[size_t(i)];
                grad->b2[size_t(k)] += d;
            }
        }
        if (m.kind == ClassifierKind::mlp) {
            for (int i = 0; i < m.hidden; ++i) {
                if (h[size_t(i)] <= 0.0) continue; // ReLU gate
                double dh = 0.0;
                for (int k = 0; k < m.n_classes; ++k) {
                    double d = (z[size_t(k)] - (int32_t(k) == y[s] ? 1.0 : 0.0)) * inv_n;
                    dh += d * m.w2[size_t(k) * size_t(m.hidden) + size_t(i)];
                }
                double* gw = grad->w1.data() + size_t(i) * size_t(m.in_dim);
                for (int j = 0; j < m.in_dim; ++j) gw[j] += dh * x[size_t(j)];
                grad->b1[size_t(i)] += dh;
            }
        }
    }
    return loss;
}

inline double classifier_loss(const ClassifierModel& m, std::span<const double> X,
                              std::span<const int32_t> y) {
    return classifier_loss_grad(m, X, y, nullptr);
}

// Mini-batch gradient descent with a seeded per-epoch shuffle.
inline ClassifierModel train_classifier(ClassifierKind kind, std::span<const double> X,
                                        std::span<const int32_t> y, int in_dim, int n_classes,
                                        const ClassifierConfig& cfg) {
    cfg.validate();
    const size_t n = y.size();
    if (X.size() != n * size_t(in_dim)) fail(errc::config, "features/labels shape mismatch");
    for (int32_t label : y)
        if (label < 0 || label >= n_classes) fail(errc::config, "label out of range");

    ClassifierModel m = init_classifier(kind, in_dim, n_classes, cfg);
    if (n == 0 || cfg.epochs == 0) return m;

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t(0));
    std::vector<double> bx;
    std::vector<int32_t> by;
    double lr = cfg.lr;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng rng(derive_seed(cfg.seed, 0xE90C + uint64_t(epoch)));
        rng.shuffle(order.data(), order.size());
        for (size_t start = 0; start < n; start += size_t(cfg.batch_size)) {
            size_t bn = std::min(size_t(cfg.batch_size), n - start);
            bx.resize(bn * size_t(in_dim));
            by.resize(bn);
            for (size_t i = 0; i < bn; ++i) {
                size_t src = order[start + i];
                std::copy_n(X.data() + src * size_t(in_dim), size_t(in_dim),
                            bx.data() + i * size_t(in_dim));
                by[i] = y[src];
            }
            ClassifierGrad grad(m);
            double loss = classifier_loss_grad(m, bx, by, &grad);
            if (!std::isfinite(loss)) fail(errc::degenerate, "classifier training diverged");
            for (size_t i = 0; i < m.w1.size(); ++i) m.w1[i] -= lr * grad.w1[i];
            for (size_t i = 0; i < m.b1.size(); ++i) m.b1[i] -= lr * grad.b1[i];
            for (size_t i = 0; i < m.w2.size(); ++i) m.w2[i] -= lr * grad.w2[i];
            for (size_t i = 0; i < m.b2.size(); ++i) m.b2[i] -= lr * grad.b2[i];
        }
        lr *= cfg.lr_decay;
    }
    for (double w : m.w1)
        if (!std::isfinite(w)) fail(errc::degenerate, "classifier training diverged");
    for (double w : m.w2)
        if (!std::isfinite(w)) fail(errc::degenerate, "classifier training diverged");
    return m;
}

// Small grid search: trains on a split of the data and keeps the config with
// the best held-out top-1 accuracy.
struct GridSearchResult {
    ClassifierConfig best;
    double best_accuracy = -1.0;
};

inline GridSearchResult grid_search_classifier(ClassifierKind kind, std::span<const double> X,
                                               std::span<const int32_t> y, int in_dim,
                                               int n_classes, const ClassifierConfig& base,
                                               const std::vector<double>& lrs,
                                               const std::vector<int>& hiddens,
                                               const std::vector<int>& epoch_choices) {
    const size_t n = y.size();
    if (n < 10) fail(errc::domain, "grid search needs at least 10 instances");
    size_t n_train = n * 4 / 5;
    GridSearchResult res;
    res.best = base;
    auto eval = [&](const ClassifierConfig& cfg) {
        ClassifierModel m = train_classifier(kind, X.subspan(0, n_train * size_t(in_dim)),
                                             std::span<const int32_t>(y.data(), n_train), in_dim,
                                             n_classes, cfg);
        size_t correct = 0;
        for (size_t i = n_train; i < n; ++i) {
            auto p = predict_proba(m, X.subspan(i * size_t(in_dim), size_t(in_dim)));
            size_t arg = 0;
            for (size_t k = 1; k < p.size(); ++k)
                if (p[k] > p[arg]) arg = k;
            if (int32_t(arg) == y[i]) ++correct;
        }
        return double(correct) / double(n - n_train);
    };
    for (double lr : lrs.empty() ? std::vector<double>{base.lr} : lrs) {
        for (int hidden : (kind == ClassifierKind::mlp && !hiddens.empty())
                              ? hiddens
                              : std::vector<int>{base.hidden}) {
            for (int ep : epoch_choices.empty() ? std::vector<int>{base.epochs} : epoch_choices) {
                ClassifierConfig cfg = base;
                cfg.kind = kind;
                cfg.lr = lr;
                cfg.hidden = hidden;
                cfg.epochs = ep;
                double acc = eval(cfg);
                if (acc > res.best_accuracy) {
                    res.best_accuracy = acc;
                    res.best = cfg;
                }
            }
        }
    }
    return res;
}

} // namespace emojivec
