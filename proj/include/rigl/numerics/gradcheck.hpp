// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rigl/numerics/ops.hpp"
#include "rigl/numerics/tape.hpp"

// Central differences computed purely from forward evaluations, never from
// the tape's backward pass.
namespace rigl {

struct GradMismatch {
    std::string parameter;
    std::size_t index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_error = 0.0;
};

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    std::size_t skipped = 0;  // steps that crossed a relu or clamp kink
    std::vector<GradMismatch> failures;
};

/// Relative error with a floor on the denominator so that gradients that are
/// zero up to round-off are judged on an absolute scale.
inline double relative_error(double a, double b, double floor = 1e-6) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

namespace detail {

inline std::uint64_t traced(const std::function<double()>& loss, double& value) {
    std::uint64_t hash = 14695981039346656037ULL;
    ops::detail::branch_trace = &hash;
    try {
        value = loss();
    } catch (...) {
        ops::detail::branch_trace = nullptr;
        throw;
    }
    ops::detail::branch_trace = nullptr;
    return hash;
}

}  // namespace detail

/// Compares `analytic` (one tensor per parameter, same order) against central
/// differences of `loss` with step `h` on every scalar of every parameter.
/// With `skip_kinks`, a coordinate whose +h or -h pass takes a different relu
/// or clamp branch than the unperturbed pass is counted as skipped.
inline GradCheckResult check_gradients(ParameterSet& params, const std::vector<Tensor>& analytic,
                                       const std::function<double()>& loss, double h, double tol,
                                       double floor = 1e-6, bool skip_kinks = false) {
    GradCheckResult out;
    double base_value = 0.0;
    const std::uint64_t base = skip_kinks ? detail::traced(loss, base_value) : 0;
    for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor& value = params[p].value;
        for (std::size_t i = 0; i < value.size(); ++i) {
            const double saved = value[i];
            double up = 0.0, down = 0.0;
            bool kink = false;
            value[i] = saved + h;
            if (skip_kinks) kink = detail::traced(loss, up) != base;
            else up = loss();
            value[i] = saved - h;
            if (skip_kinks) kink = detail::traced(loss, down) != base || kink;
            else down = loss();
            value[i] = saved;
            if (kink) {
                ++out.skipped;
                continue;
            }
            const double numeric = (up - down) / (2.0 * h);
            const double err = relative_error(analytic[p][i], numeric, floor);
            out.max_rel_error = std::max(out.max_rel_error, err);
            ++out.checked;
            if (err >= tol) out.failures.push_back({params[p].name, i, analytic[p][i], numeric, err});
        }
    }
    return out;
}

}  // namespace rigl
