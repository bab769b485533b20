// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>

#include "rigl/domain/types.hpp"
#include "rigl/numerics/ops.hpp"
#include "rigl/training/config.hpp"

namespace rigl {

/// Uniform double in [0, 1) from the top 53 bits, identical on every platform.
inline double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Flips each student response with probability p. One draw per response in
/// frame, member, interaction order.
inline GroupFrames augment_flip(const GroupFrames& g, double p, std::mt19937_64& rng) {
    GroupFrames out = g;
    for (auto& frame : out.students)
        for (auto& list : frame)
            for (auto& it : list)
                if (unit_draw(rng) < p) it.response = 1 - it.response;
    return out;
}

inline constexpr double kProbClamp = 1e-7;

/// Summed binary cross-entropy. `targets` holds 0/1 in a column.
inline Var student_loss(Var pred, const Tensor& targets) {
    Tape& tape = *pred.tape;
    if (targets.size() == 0) return tape.constant(Tensor(1, 1));
    Var p = ops::clamp(pred, kProbClamp, 1.0 - kProbClamp);
    Tensor neg(targets.rows(), targets.cols());
    for (std::size_t i = 0; i < targets.size(); ++i) neg[i] = 1.0 - targets[i];
    Var ll = ops::add(ops::mul(tape.constant(targets), ops::log(p)),
                      ops::mul(tape.constant(neg), ops::log(ops::shift(ops::scale(p, -1.0), 1.0))));
    return ops::scale(ops::sum(ll), -1.0);
}

/// Summed squared error.
inline Var group_loss(Var pred, const Tensor& targets) {
    Tape& tape = *pred.tape;
    if (targets.size() == 0) return tape.constant(Tensor(1, 1));
    Var e = ops::sub(pred, tape.constant(targets));
    return ops::sum(ops::mul(e, e));
}

/// Per-row contrastive terms (B x 1) for states `h` against augmented states
/// `h_plus`; row j of h_plus is the positive of row i = j. Scores are shifted by
/// 1/tau before exponentiation, which cancels exactly.
inline Var contrastive_terms(Var h, Var h_plus, double tau, DenominatorMode mode) {
    Tape& tape = *h.tape;
    const std::size_t b = h.rows();
    Var s = ops::scale(ops::cosine_similarity(h, h_plus), 1.0 / tau);
    Var e = ops::exp(ops::shift(s, -1.0 / tau));
    if (mode == DenominatorMode::PaperLiteral) {
        Tensor off(b, b, 1.0);
        for (std::size_t i = 0; i < b; ++i) off(i, i) = 0.0;
        e = ops::mul(e, tape.constant(off));
    }
    Var log_den = ops::shift(ops::log(ops::sum_cols(e)), 1.0 / tau);
    Var pos = ops::sum_cols(ops::mul(s, tape.constant(Tensor::identity(b))));
    return ops::sub(log_den, pos);
}

inline Var contrastive_loss(Var h, Var h_plus, double tau, DenominatorMode mode) {
    return ops::sum(contrastive_terms(h, h_plus, tau, mode));
}

/// L = L_grp + L_stu / |o| + gamma * L_cl.
inline double total_loss(double grp, double stu, double cl, double gamma, std::size_t group_size) {
    return grp + stu / static_cast<double>(group_size) + gamma * cl;
}

}  // namespace rigl
