#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "emojivec/csv.hpp"
#include "emojivec/error.hpp"

namespace emojivec {

// Labeled square count matrix, row = true label, column = predicted label.
class ConfusionMatrix {
  public:
    ConfusionMatrix() = default;

    explicit ConfusionMatrix(std::vector<std::string> labels) : labels_(std::move(labels)) {
        for (size_t i = 0; i < labels_.size(); ++i)
            if (!index_.emplace(labels_[i], i).second) fail(errc::config, "duplicate label");
        counts_.assign(labels_.size() * labels_.size(), 0);
    }

    const std::vector<std::string>& labels() const { return labels_; }
    size_t label_count() const { return labels_.size(); }

    size_t label_index(const std::string& label) const {
        auto it = index_.find(label);
        if (it == index_.end()) fail(errc::not_found, "unknown label '" + label + "'");
        return it->second;
    }

    void add(const std::string& true_label, const std::string& predicted_label, int64_t n = 1) {
        counts_[label_index(true_label) * labels_.size() + label_index(predicted_label)] += n;
    }

    int64_t at(size_t row, size_t col) const { return counts_[row * labels_.size() + col]; }

    int64_t row_sum(size_t row) const {
        int64_t s = 0;
        for (size_t c = 0; c < labels_.size(); ++c) s += at(row, c);
        return s;
    }

    int64_t total() const {
        int64_t s = 0;
        for (int64_t c : counts_) s += c;
        return s;
    }

    // Row-stochastic view; rows without samples stay all-zero.
    std::vector<double> normalized() const {
        const size_t n = labels_.size();
        std::vector<double> out(n * n, 0.0);
        for (size_t r = 0; r < n; ++r) {
            int64_t rs = row_sum(r);
            if (rs == 0) continue;
            for (size_t c = 0; c < n; ++c) out[r * n + c] = double(at(r, c)) / double(rs);
        }
        return out;
    }

    struct PrecisionStats {
        double mean = 0.0;
        double stddev = 0.0; // population
        std::vector<double> per_label;     // aligned to labels(); NaN-free, 0 for empty rows
        std::vector<bool> has_samples;
        size_t labels_used = 0;
    };

    // Per-label precision = diagonal / row sum, aggregated as the unweighted
    // mean and population std over labels that actually have samples.
    PrecisionStats precision_stats() const {
        PrecisionStats st;
        const size_t n = labels_.size();
        st.per_label.assign(n, 0.0);
        st.has_samples.assign(n, false);
        double sum = 0.0;
        for (size_t r = 0; r < n; ++r) {
            int64_t rs = row_sum(r);
            if (rs == 0) continue;
            st.has_samples[r] = true;
            st.per_label[r] = double(at(r, r)) / double(rs);
            sum += st.per_label[r];
            ++st.labels_used;
        }
        if (st.labels_used == 0) return st;
        st.mean = sum / double(st.labels_used);
        double var = 0.0;
        for (size_t r = 0; r < n; ++r)
            if (st.has_samples[r]) {
                double d = st.per_label[r] - st.mean;
                var += d * d;
            }
        st.stddev = std::sqrt(var / double(st.labels_used));
        return st;
    }

    void write_csv(std::ostream& out, bool normalize = true) const {
        std::vector<std::string> header{"label"};
        header.insert(header.end(), labels_.begin(), labels_.end());
        csv::write_row(out, header);
        std::vector<double> norm;
        if (normalize) norm = normalized();
        const size_t n = labels_.size();
        for (size_t r = 0; r < n; ++r) {
            std::vector<std::string> row{labels_[r]};
            for (size_t c = 0; c < n; ++c) {
                if (normalize) {
                    char buf[32];
                    std::snprintf(buf, sizeof(buf), "%.9g", norm[r * n + c]);
                    row.emplace_back(buf);
                } else {
                    row.push_back(std::to_string(at(r, c)));
                }
            }
            csv::write_row(out, row);
        }
    }

  private:
    std::vector<std::string> labels_;
    std::unordered_map<std::string, size_t> index_;
    std::vector<int64_t> counts_;
};

// normalized(a) - normalized(b); requires identical label order. Row sums are
// zero wherever both inputs have samples.
inline std::vector<double> matrix_difference(const ConfusionMatrix& a, const ConfusionMatrix& b) {
    if (a.labels() != b.labels()) fail(errc::config, "confusion matrices have different label order");
    auto na = a.normalized();
    auto nb = b.normalized();
    std::vector<double> out(na.size());
    for (size_t i = 0; i < na.size(); ++i) out[i] = na[i] - nb[i];
    return out;
}

inline void write_matrix_csv(std::ostream& out, const std::vector<std::string>& labels,
                             const std::vector<double>& values) {
    std::vector<std::string> header{"label"};
    header.insert(header.end(), labels.begin(), labels.end());
    csv::write_row(out, header);
    const size_t n = labels.size();
    for (size_t r = 0; r < n; ++r) {
        std::vector<std::string> row{labels[r]};
        for (size_t c = 0; c < n; ++c) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.9g", values[r * n + c]);
            row.emplace_back(buf);
        }
        csv::write_row(out, row);
    }
}

} // namespace emojivec
