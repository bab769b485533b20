// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rigl {

enum class DenominatorMode { PaperLiteral, StandardInfoNce };

inline std::string to_string(DenominatorMode m) {
    return m == DenominatorMode::PaperLiteral ? "paper-literal" : "standard-infonce";
}

inline DenominatorMode parse_denominator_mode(const std::string& s) {
    if (s == "paper-literal") return DenominatorMode::PaperLiteral;
    if (s == "standard-infonce") return DenominatorMode::StandardInfoNce;
    throw std::invalid_argument("unknown denominator mode '" + s + "'");
}

struct TrainConfig {
    double gamma = 0.01;
    double tau = 0.05;
    double flip_prob = 0.1;
    std::size_t epochs = 30;
    std::size_t batch_groups = 4;
    std::uint64_t seed = 0;
    double lr = 1e-3;
    std::size_t folds = 5;
    DenominatorMode denominator = DenominatorMode::PaperLiteral;
    double clip_norm = 5.0;
    bool contrastive = true;  // off drops the augmented stream and the gamma term

    double effective_gamma() const { return contrastive ? gamma : 0.0; }

    void validate() const {
        if (!(flip_prob >= 0.0 && flip_prob <= 1.0)) throw std::invalid_argument("flip_prob must lie in [0, 1]");
        if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
        if (folds < 2) throw std::invalid_argument("folds must be at least 2");
        if (batch_groups < 1) throw std::invalid_argument("batch_groups must be at least 1");
        if (!(lr >= 0.0)) throw std::invalid_argument("lr must be non-negative");
        if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be non-negative");
    }

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

}  // namespace rigl
