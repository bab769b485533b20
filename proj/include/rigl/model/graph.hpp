// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <vector>

#include "rigl/numerics/ops.hpp"
#include "rigl/util/log.hpp"

namespace rigl {

/// One frame of a group-individual graph. Node 0 is the group, node i + 1 is member i.
struct GraphSnapshot {
    Tensor features;    // (n + 1) x 2d
    Tensor relation;    // n x n student similarities
    Tensor adjacency;   // (n + 1) x (n + 1), zero diagonal
    Tensor normalized;  // D^-1/2 (A + I) D^-1/2
    std::vector<char> present;
    bool saturated = false;  // top_k reached the number of present peers
};

/// Directed top-k choices per present student, ties to the lower index, then
/// symmetrized by OR. The group node links to every present student.
/// Returns the (n + 1)-node adjacency.
inline Tensor relation_adjacency(const Tensor& relation, const std::vector<char>& present, std::size_t k,
                                 bool student_edges = true, bool* saturated = nullptr) {
    const std::size_t n = present.size();
    Tensor a(n + 1, n + 1);
    std::vector<std::size_t> peers;
    bool sat = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (!present[i]) continue;
        a(0, i + 1) = a(i + 1, 0) = 1.0;
        if (!student_edges) continue;
        peers.clear();
        for (std::size_t j = 0; j < n; ++j)
            if (j != i && present[j]) peers.push_back(j);
        if (k >= peers.size() + 1) sat = true;
        std::stable_sort(peers.begin(), peers.end(),
                         [&](std::size_t x, std::size_t y) { return relation(i, x) > relation(i, y); });
        const std::size_t take = std::min(k, peers.size());
        for (std::size_t p = 0; p < take; ++p) a(i + 1, peers[p] + 1) = a(peers[p] + 1, i + 1) = 1.0;
    }
    if (saturated != nullptr) *saturated = sat;
    return a;
}

/// Symmetric normalization with self-loops; degrees come from A + I so
/// isolated nodes keep weight 1 on themselves.
inline Tensor normalize_adjacency(const Tensor& a) {
    const std::size_t n = a.rows();
    Tensor tilde = a;
    for (std::size_t i = 0; i < n; ++i) tilde(i, i) += 1.0;
    std::vector<double> inv_sqrt(n);
    for (std::size_t i = 0; i < n; ++i) {
        double deg = 0.0;
        for (std::size_t j = 0; j < n; ++j) deg += tilde(i, j);
        inv_sqrt[i] = 1.0 / std::sqrt(deg);
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) tilde(i, j) *= inv_sqrt[i] * inv_sqrt[j];
    return tilde;
}

inline void warn_saturated_once(std::size_t k) {
    static std::atomic<bool> warned{false};
    if (!warned.exchange(true)) {
        log::warn("top_k=" + std::to_string(k) +
                  " reaches the number of present peers in some frames; those students link to all present peers");
    }
}

/// Builds the snapshot from node features (row 0 = group).
inline GraphSnapshot build_snapshot(Tensor features, std::vector<char> present, std::size_t k,
                                    bool student_edges = true) {
    const std::size_t n = present.size();
    if (features.rows() != n + 1) throw std::invalid_argument("snapshot features need one row per node");
    GraphSnapshot s;
    Tensor students(n, features.cols());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < features.cols(); ++c) students(i, c) = features(i + 1, c);
    s.relation = ops::cosine_similarity(students, students);
    s.adjacency = relation_adjacency(s.relation, present, k, student_edges, &s.saturated);
    if (s.saturated) warn_saturated_once(k);
    s.normalized = normalize_adjacency(s.adjacency);
    s.features = std::move(features);
    s.present = std::move(present);
    return s;
}

/// One graph convolution: relu(A_hat V W + b).
inline Var gcn_layer(Var a_hat, Var v, Var w, Var b) {
    return ops::relu(ops::add(ops::matmul(ops::matmul(a_hat, v), w), b));
}

}  // namespace rigl
