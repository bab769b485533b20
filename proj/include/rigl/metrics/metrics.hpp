// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rigl/util/text.hpp"

namespace rigl::metrics {

/// Rank-sum AUC with midranks for ties.
inline double auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw std::invalid_argument("auc: scores and labels differ in length");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double pos_rank_sum = 0.0;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]] == 1) {
                pos_rank_sum += midrank;
                ++pos;
            }
        }
        i = j;
    }
    const std::size_t neg = scores.size() - pos;
    if (pos == 0 || neg == 0) throw std::domain_error("AUC undefined: labels contain a single class");
    const double p = static_cast<double>(pos), n = static_cast<double>(neg);
    return (pos_rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

inline double acc(std::span<const double> scores, std::span<const int> labels, double threshold = 0.5) {
    if (scores.size() != labels.size()) throw std::invalid_argument("acc: scores and labels differ in length");
    if (scores.empty()) throw std::invalid_argument("acc: no predictions");
    std::size_t hit = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) hit += static_cast<int>(scores[i] >= threshold) == labels[i];
    return static_cast<double>(hit) / static_cast<double>(scores.size());
}

struct ErrorPair {
    double rmse = 0.0;
    double mae = 0.0;
};

inline ErrorPair rmse_mae(std::span<const double> pred, std::span<const double> target) {
    if (pred.size() != target.size()) {
        throw std::invalid_argument("rmse_mae: length mismatch " + std::to_string(pred.size()) + " vs " +
                                    std::to_string(target.size()));
    }
    if (pred.empty()) throw std::invalid_argument("rmse_mae: no predictions");
    double sq = 0.0, ab = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double e = pred[i] - target[i];
        sq += e * e;
        ab += std::abs(e);
    }
    const double n = static_cast<double>(pred.size());
    return {std::sqrt(sq / n), ab / n};
}

struct MetricReport {
    double auc = 0.0;
    double acc = 0.0;
    double rmse = 0.0;
    double mae = 0.0;
    std::size_t student_predictions = 0;
    std::size_t group_predictions = 0;
};

/// Pooled predictions of one evaluation.
struct Predictions {
    std::vector<double> student_scores;
    std::vector<int> student_labels;
    std::vector<double> group_scores;
    std::vector<double> group_targets;

    void append(const Predictions& o) {
        student_scores.insert(student_scores.end(), o.student_scores.begin(), o.student_scores.end());
        student_labels.insert(student_labels.end(), o.student_labels.begin(), o.student_labels.end());
        group_scores.insert(group_scores.end(), o.group_scores.begin(), o.group_scores.end());
        group_targets.insert(group_targets.end(), o.group_targets.begin(), o.group_targets.end());
    }
};

inline MetricReport report(const Predictions& p) {
    MetricReport r;
    r.student_predictions = p.student_scores.size();
    r.group_predictions = p.group_scores.size();
    if (r.student_predictions == 0 && r.group_predictions == 0) throw std::invalid_argument("empty evaluation split");
    if (r.student_predictions > 0) {
        r.auc = auc(p.student_scores, p.student_labels);
        r.acc = acc(p.student_scores, p.student_labels);
    }
    if (r.group_predictions > 0) {
        const auto e = rmse_mae(p.group_scores, p.group_targets);
        r.rmse = e.rmse;
        r.mae = e.mae;
    }
    return r;
}

inline constexpr const char* kReportHeader = "auc,acc,rmse,mae";

inline std::string report_row(const MetricReport& r) {
    return text::format_double(r.auc) + "," + text::format_double(r.acc) + "," + text::format_double(r.rmse) + "," +
           text::format_double(r.mae);
}

}  // namespace rigl::metrics
