// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace rigl {

struct ModelConfig {
    std::size_t d = 256;
    std::size_t gcn_layers = 2;
    std::size_t attn_layers = 4;
    std::size_t top_k = 0;  // 0 picks min(3, |o| - 1) per group
    std::size_t heads = 1;
    bool strict_no_leak = true;
    std::string similarity = "cosine";

    // Ablation switches. All on is the full model.
    bool reciprocal = true;       // group <-> student fusion
    bool attention_agg = true;    // absence-aware weights; off = uniform 1/|o|
    bool dynamic_graph = true;    // similarity edges between students

    std::size_t effective_top_k(std::size_t group_size) const {
        if (top_k != 0) return top_k;
        return std::max<std::size_t>(1, std::min<std::size_t>(3, group_size - 1));
    }

    void validate() const {
        if (d == 0 || d % 2 != 0) throw std::invalid_argument("d must be a positive even number");
        if (gcn_layers < 1) throw std::invalid_argument("gcn_layers must be at least 1");
        if (attn_layers < 1) throw std::invalid_argument("attn_layers must be at least 1");
        if (heads < 1 || d % heads != 0) throw std::invalid_argument("heads must divide d");
        if (similarity != "cosine") throw std::invalid_argument("unsupported similarity '" + similarity + "'");
        if (!reciprocal && !attention_agg) {
            throw std::invalid_argument("attention aggregation is part of reciprocal fusion; disable only one");
        }
    }

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

}  // namespace rigl
