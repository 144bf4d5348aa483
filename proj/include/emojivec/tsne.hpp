#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "emojivec/csv.hpp"
#include "emojivec/emoji.hpp"
#include "emojivec/error.hpp"
#include "emojivec/rng.hpp"

namespace emojivec {

struct TsneConfig {
    double perplexity = 30.0;
    int iterations = 1000;
    double learning_rate = 200.0;
    double early_exaggeration = 12.0;
    int exaggeration_iters = 250;
    double momentum_initial = 0.5;
    double momentum_final = 0.8;
    int momentum_switch_iter = 250;
    uint64_t seed = 1;

    void validate(size_t n) const {
        if (n < 4) fail(errc::config, "t-SNE needs at least 4 points");
        if (!(perplexity > 1.0) || perplexity >= double(n - 1))
            fail(errc::config, "perplexity must satisfy 1 < perplexity < n-1");
        if (iterations < 1) fail(errc::config, "iterations must be >= 1");
        if (!(learning_rate > 0.0) || !(early_exaggeration > 0.0) ||
            !(momentum_initial > 0.0) || !(momentum_final > 0.0))
            fail(errc::config, "t-SNE rates must be > 0");
    }
};

struct Projection2D {
    std::vector<std::string> keys; // aligned with input rows
    std::vector<double> coords;    // n x 2
    double initial_kl = 0.0;
    double final_kl = 0.0;
    std::vector<double> kl_per_iteration; // index = iteration, last entry = final
};

namespace detail {

// Per-point Gaussian bandwidth via bisection on the precision so the
// conditional entropy hits log2(perplexity) within 1e-5 (max 50 steps).
inline void gaussian_affinities(const std::vector<double>& d2, size_t n, double perplexity,
                                std::vector<double>& p_cond) {
    const double target_bits = std::log2(perplexity);
    const double ln2 = std::log(2.0);
    std::vector<double> row(n);
    for (size_t i = 0; i < n; ++i) {
        double beta = 1.0, beta_min = 0.0, beta_max = std::numeric_limits<double>::infinity();
        double h_bits = 0.0;
        for (int step = 0; step < 50; ++step) {
            double sum = 0.0, dsum = 0.0;
            for (size_t j = 0; j < n; ++j) {
                if (j == i) {
                    row[j] = 0.0;
                    continue;
                }
                double v = std::exp(-beta * d2[i * n + j]);
                row[j] = v;
                sum += v;
                dsum += d2[i * n + j] * v;
            }
            if (sum <= 0.0) sum = 1e-300;
            double h_nats = std::log(sum) + beta * dsum / sum;
            h_bits = h_nats / ln2;
            double diff = h_bits - target_bits;
            if (std::abs(diff) < 1e-5) break;
            if (diff > 0) { // entropy too high: sharpen
                beta_min = beta;
                beta = std::isinf(beta_max) ? beta * 2.0 : 0.5 * (beta + beta_max);
            } else {
                beta_max = beta;
                beta = 0.5 * (beta + beta_min);
            }
        }
        double sum = 0.0;
        for (size_t j = 0; j < n; ++j) sum += row[j];
        if (sum <= 0.0) sum = 1e-300;
        for (size_t j = 0; j < n; ++j) p_cond[i * n + j] = row[j] / sum;
    }
}

} // namespace detail

// Symmetrized input affinity matrix P: per-point Gaussian bandwidths fitted to
// the perplexity, then p_ij = (p_j|i + p_i|j) / 2n. Sums to one.
inline std::vector<double> tsne_affinities(const std::vector<double>& x, size_t n, size_t dim,
                                           double perplexity) {
    if (x.size() != n * dim) fail(errc::config, "input matrix shape mismatch");
    std::vector<double> d2(n * n, 0.0);
    double max_d2 = 0.0;
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = i + 1; j < n; ++j) {
            double s = 0.0;
            for (size_t k = 0; k < dim; ++k) {
                double diff = x[i * dim + k] - x[j * dim + k];
                s += diff * diff;
            }
            d2[i * n + j] = s;
            d2[j * n + i] = s;
            max_d2 = std::max(max_d2, s);
        }
    }
    if (max_d2 == 0.0) fail(errc::degenerate, "all points identical");

    std::vector<double> p_cond(n * n, 0.0);
    detail::gaussian_affinities(d2, n, perplexity, p_cond);

    std::vector<double> p(n * n, 0.0);
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j)
            p[i * n + j] = (p_cond[i * n + j] + p_cond[j * n + i]) / (2.0 * double(n));
    return p;
}

// Exact O(n^2) t-SNE to 2D: symmetrized Gaussian input affinities, Student-t
// output kernel, gradient descent with momentum and early exaggeration.
// The KL divergence against the true (unexaggerated) P is logged per iteration.
inline Projection2D tsne(const std::vector<double>& x, size_t n, size_t dim, const TsneConfig& cfg,
                         const std::vector<double>* initial_coords = nullptr) {
    cfg.validate(n);
    std::vector<double> p = tsne_affinities(x, n, dim, cfg.perplexity);

    Projection2D out;
    out.coords.assign(n * 2, 0.0);
    if (initial_coords) {
        if (initial_coords->size() != n * 2) fail(errc::config, "initial coords shape mismatch");
        out.coords = *initial_coords;
    } else {
        Rng rng(derive_seed(cfg.seed, 0x75ED));
        for (auto& c : out.coords) c = rng.next_gaussian() * 1e-4;
    }

    std::vector<double> inc(n * 2, 0.0);
    std::vector<double> gains(n * 2, 1.0);
    std::vector<double> num(n * n, 0.0);
    std::vector<double> grad(n * 2, 0.0);
    auto& y = out.coords;

    auto compute_q = [&]() {
        double sum_q = 0.0;
        for (size_t i = 0; i < n; ++i) {
            num[i * n + i] = 0.0;
            for (size_t j = i + 1; j < n; ++j) {
                double dx = y[i * 2] - y[j * 2];
                double dy = y[i * 2 + 1] - y[j * 2 + 1];
                double v = 1.0 / (1.0 + dx * dx + dy * dy);
                num[i * n + j] = v;
                num[j * n + i] = v;
                sum_q += 2.0 * v;
            }
        }
        return std::max(sum_q, 1e-300);
    };
    auto kl_against_p = [&](double sum_q) {
        double kl = 0.0;
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                double pij = std::max(p[i * n + j], 1e-12);
                double qij = std::max(num[i * n + j] / sum_q, 1e-12);
                kl += pij * std::log(pij / qij);
            }
        return kl;
    };

    out.kl_per_iteration.reserve(size_t(cfg.iterations) + 1);
    for (int iter = 0; iter < cfg.iterations; ++iter) {
        const double exag = iter < cfg.exaggeration_iters ? cfg.early_exaggeration : 1.0;
        const double momentum =
            iter < cfg.momentum_switch_iter ? cfg.momentum_initial : cfg.momentum_final;
        double sum_q = compute_q();
        out.kl_per_iteration.push_back(kl_against_p(sum_q));
        if (iter == 0) out.initial_kl = out.kl_per_iteration.front();

        for (size_t i = 0; i < n; ++i) {
            double gx = 0.0, gy = 0.0;
            for (size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                double w = num[i * n + j];
                double mult = (exag * p[i * n + j] - w / sum_q) * w;
                gx += mult * (y[i * 2] - y[j * 2]);
                gy += mult * (y[i * 2 + 1] - y[j * 2 + 1]);
            }
            grad[i * 2] = 4.0 * gx;
            grad[i * 2 + 1] = 4.0 * gy;
        }
        // per-coordinate gains as in the reference implementation; without
        // them a learning rate of 200 oscillates instead of converging
        double mean_x = 0.0, mean_y = 0.0;
        for (size_t c = 0; c < n * 2; ++c) {
            bool opposite = (grad[c] > 0.0) != (inc[c] > 0.0);
            gains[c] = opposite ? gains[c] + 0.2 : gains[c] * 0.8;
            if (gains[c] < 0.01) gains[c] = 0.01;
            inc[c] = momentum * inc[c] - cfg.learning_rate * gains[c] * grad[c];
            y[c] += inc[c];
            (c % 2 == 0 ? mean_x : mean_y) += y[c];
        }
        mean_x /= double(n);
        mean_y /= double(n);
        for (size_t i = 0; i < n; ++i) {
            y[i * 2] -= mean_x;
            y[i * 2 + 1] -= mean_y;
        }
    }
    double sum_q = compute_q();
    out.final_kl = kl_against_p(sum_q);
    out.kl_per_iteration.push_back(out.final_kl);
    for (double v : y)
        if (!std::isfinite(v)) fail(errc::degenerate, "projection diverged to non-finite coordinates");
    return out;
}

// CSV map for external plotting: emoji,x,y,group,subgroup.
inline void export_map(const Projection2D& proj, const EmojiCatalog& catalog, std::ostream& out) {
    out << "emoji,x,y,group,subgroup\n";
    char buf[64];
    for (size_t i = 0; i < proj.keys.size(); ++i) {
        auto [g, s] = catalog.group_of(normalize_emoji_utf8(proj.keys[i]));
        out << csv::escape(proj.keys[i]);
        for (int c = 0; c < 2; ++c) {
            auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), proj.coords[i * 2 + size_t(c)]);
            out << ',';
            out.write(buf, end - buf);
        }
        out << ',' << csv::escape(g) << ',' << csv::escape(s) << '\n';
    }
}

inline void write_kl_log(const Projection2D& proj, std::ostream& out) {
    out << "iteration,kl\n";
    char buf[64];
    for (size_t i = 0; i < proj.kl_per_iteration.size(); ++i) {
        auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), proj.kl_per_iteration[i]);
        out << i << ',';
        out.write(buf, end - buf);
        out << '\n';
    }
}

} // namespace emojivec
