// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "rigl/numerics/tape.hpp"

namespace rigl {

struct AdamOptions {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Bias-corrected Adam. Moments are created lazily on the first step and are
/// matched to parameters by position.
class Adam {
   public:
    explicit Adam(AdamOptions options = {}) : options_(options) {}

    /// One update from the gradients currently stored in `params`. Throws
    /// without touching anything if a gradient is not finite.
    void step(ParameterSet& params) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            if (!params[i].grad.all_finite()) {
                throw std::domain_error("non-finite gradient for parameter '" + params[i].name + "'");
            }
        }
        if (first_.empty()) {
            for (std::size_t i = 0; i < params.size(); ++i) {
                first_.emplace_back(params[i].value.rows(), params[i].value.cols());
                second_.emplace_back(params[i].value.rows(), params[i].value.cols());
            }
        }
        if (first_.size() != params.size()) throw std::invalid_argument("Adam state does not match parameter set");
        ++steps_;
        const double c1 = 1.0 - std::pow(options_.beta1, static_cast<double>(steps_));
        const double c2 = 1.0 - std::pow(options_.beta2, static_cast<double>(steps_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            Parameter& p = params[i];
            Tensor& m = first_[i];
            Tensor& v = second_[i];
            if (m.shape() != p.value.shape()) {
                throw std::invalid_argument("Adam moment shape mismatch for '" + p.name + "'");
            }
            for (std::size_t k = 0; k < p.value.size(); ++k) {
                const double g = p.grad[k];
                m[k] = options_.beta1 * m[k] + (1.0 - options_.beta1) * g;
                v[k] = options_.beta2 * v[k] + (1.0 - options_.beta2) * g * g;
                const double m_hat = m[k] / c1;
                const double v_hat = v[k] / c2;
                p.value[k] -= options_.lr * m_hat / (std::sqrt(v_hat) + options_.eps);
            }
        }
    }

    std::size_t steps() const { return steps_; }
    const AdamOptions& options() const { return options_; }
    const Tensor& first_moment(std::size_t i) const { return first_.at(i); }
    const Tensor& second_moment(std::size_t i) const { return second_.at(i); }

   private:
    AdamOptions options_;
    std::vector<Tensor> first_;
    std::vector<Tensor> second_;
    std::size_t steps_ = 0;
};

/// Rescales all gradients so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
inline double clip_grad_norm(ParameterSet& params, double max_norm) {
    double sq = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i)
        for (double g : params[i].grad.values()) sq += g * g;
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const double f = max_norm / norm;
        for (std::size_t i = 0; i < params.size(); ++i)
            for (double& g : params[i].grad.values()) g *= f;
    }
    return norm;
}

}  // namespace rigl
