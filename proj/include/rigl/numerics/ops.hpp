// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rigl/numerics/tape.hpp"

/// Differentiable primitives. Each op computes its forward value eagerly and
/// records a closure that adds the vector-Jacobian product into its parents.
namespace rigl::ops {

namespace detail {

inline void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                                    to_string(b.shape()));
    }
}

template <class F>
Var unary(Var a, Tensor out, F local_grad) {
    Tape& tape = *a.tape;
    return tape.record(std::move(out), {a}, [a_id = a.id, local_grad](Tape& t, std::uint32_t self) {
        Tensor* ga = t.grad_sink(a_id);
        if (ga == nullptr) return;
        const Tensor& g = t.grad(self);
        const Tensor& x = t.value(a_id);
        const Tensor& y = t.value(self);
        for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * local_grad(x[i], y[i]);
    });
}

/// When set, relu and clamp fold the branch taken by every element into this
/// hash, so a caller can tell whether two forward passes crossed a kink.
inline thread_local std::uint64_t* branch_trace = nullptr;

inline void trace_branch(unsigned branch) {
    if (branch_trace != nullptr) *branch_trace = (*branch_trace ^ branch) * 1099511628211ULL;
}

}  // namespace detail

inline Var matmul(Var a, Var b) {
    Tensor out = rigl::matmul(a.value(), b.value());
    return a.tape->record(std::move(out), {a, b}, [a_id = a.id, b_id = b.id](Tape& t, std::uint32_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& av = t.value(a_id);
        const Tensor& bv = t.value(b_id);
        if (Tensor* ga = t.grad_sink(a_id)) {
            // dA = G B^T
            for (std::size_t i = 0; i < av.rows(); ++i)
                for (std::size_t k = 0; k < av.cols(); ++k) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < bv.cols(); ++j) s += g(i, j) * bv(k, j);
                    (*ga)(i, k) += s;
                }
        }
        if (Tensor* gb = t.grad_sink(b_id)) {
            // dB = A^T G
            for (std::size_t i = 0; i < av.rows(); ++i)
                for (std::size_t k = 0; k < av.cols(); ++k) {
                    const double aik = av(i, k);
                    if (aik == 0.0) continue;
                    for (std::size_t j = 0; j < bv.cols(); ++j) (*gb)(k, j) += aik * g(i, j);
                }
        }
    });
}

/// a + b. `b` may also be a single row, which is added to every row of `a`.
inline Var add(Var a, Var b) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    const bool broadcast = bv.rows() == 1 && av.rows() != 1 && bv.cols() == av.cols();
    if (!broadcast) detail::require_same_shape("add", av, bv);
    Tensor out = av;
    for (std::size_t r = 0; r < av.rows(); ++r)
        for (std::size_t c = 0; c < av.cols(); ++c) out(r, c) += broadcast ? bv(0, c) : bv(r, c);
    return a.tape->record(std::move(out), {a, b}, [a_id = a.id, b_id = b.id, broadcast](Tape& t, std::uint32_t self) {
        const Tensor& g = t.grad(self);
        if (Tensor* ga = t.grad_sink(a_id)) *ga += g;
        if (Tensor* gb = t.grad_sink(b_id)) {
            if (!broadcast) {
                *gb += g;
            } else {
                for (std::size_t r = 0; r < g.rows(); ++r)
                    for (std::size_t c = 0; c < g.cols(); ++c) (*gb)(0, c) += g(r, c);
            }
        }
    });
}

/// s * a
inline Var scale(Var a, double s) {
    Tensor out = a.value();
    for (double& v : out.values()) v *= s;
    return detail::unary(a, std::move(out), [s](double, double) { return s; });
}

/// a + s, elementwise.
inline Var shift(Var a, double s) {
    Tensor out = a.value();
    for (double& v : out.values()) v += s;
    return detail::unary(a, std::move(out), [](double, double) { return 1.0; });
}

inline Var sub(Var a, Var b) { return add(a, scale(b, -1.0)); }

/// Elementwise product of equally shaped tensors.
inline Var mul(Var a, Var b) {
    detail::require_same_shape("mul", a.value(), b.value());
    Tensor out = a.value();
    const Tensor& bv = b.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
    return a.tape->record(std::move(out), {a, b}, [a_id = a.id, b_id = b.id](Tape& t, std::uint32_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& av = t.value(a_id);
        const Tensor& bv = t.value(b_id);
        if (Tensor* ga = t.grad_sink(a_id))
            for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * bv[i];
        if (Tensor* gb = t.grad_sink(b_id))
            for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * av[i];
    });
}

inline Var relu(Var a) {
    Tensor out = a.value();
    for (double& v : out.values()) {
        detail::trace_branch(v > 0.0 ? 1u : 2u);
        v = v > 0.0 ? v : 0.0;
    }
    return detail::unary(a, std::move(out), [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

inline Var sigmoid(Var a) {
    Tensor out = a.value();
    for (double& v : out.values()) {
        if (v >= 0.0) {
            v = 1.0 / (1.0 + std::exp(-v));
        } else {
            const double e = std::exp(v);
            v = e / (1.0 + e);
        }
    }
    return detail::unary(a, std::move(out), [](double, double y) { return y * (1.0 - y); });
}

inline Var exp(Var a) {
    Tensor out = a.value();
    for (double& v : out.values()) v = std::exp(v);
    return detail::unary(a, std::move(out), [](double, double y) { return y; });
}

inline Var log(Var a) {
    Tensor out = a.value();
    for (double& v : out.values()) {
        if (!(v > 0.0)) throw std::domain_error("log of non-positive value " + std::to_string(v));
        v = std::log(v);
    }
    return detail::unary(a, std::move(out), [](double x, double) { return 1.0 / x; });
}

/// Clamps into [lo, hi]; gradient passes only inside the interval.
inline Var clamp(Var a, double lo, double hi) {
    Tensor out = a.value();
    for (double& v : out.values()) {
        detail::trace_branch(v < lo ? 1u : (v > hi ? 2u : 3u));
        v = std::min(std::max(v, lo), hi);
    }
    return detail::unary(a, std::move(out), [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

inline Var transpose(Var a) {
    return a.tape->record(transposed(a.value()), {a}, [a_id = a.id](Tape& t, std::uint32_t self) {
        if (Tensor* ga = t.grad_sink(a_id)) *ga += transposed(t.grad(self));
    });
}

inline Var sum(Var a) {
    double s = 0.0;
    for (double v : a.value().values()) s += v;
    return a.tape->record(Tensor(1, 1, s), {a}, [a_id = a.id](Tape& t, std::uint32_t self) {
        if (Tensor* ga = t.grad_sink(a_id)) {
            const double g = t.grad(self)[0];
            for (double& v : ga->values()) v += g;
        }
    });
}

/// Column-wise mean over rows: (n x c) -> (1 x c).
inline Var mean_rows(Var a) {
    const Tensor& av = a.value();
    if (av.rows() == 0) throw std::invalid_argument("mean_rows of an empty tensor");
    Tensor out(1, av.cols());
    for (std::size_t r = 0; r < av.rows(); ++r)
        for (std::size_t c = 0; c < av.cols(); ++c) out(0, c) += av(r, c);
    const double inv = 1.0 / static_cast<double>(av.rows());
    for (double& v : out.values()) v *= inv;
    return a.tape->record(std::move(out), {a}, [a_id = a.id, inv](Tape& t, std::uint32_t self) {
        if (Tensor* ga = t.grad_sink(a_id)) {
            const Tensor& g = t.grad(self);
            for (std::size_t r = 0; r < ga->rows(); ++r)
                for (std::size_t c = 0; c < ga->cols(); ++c) (*ga)(r, c) += g(0, c) * inv;
        }
    });
}

/// Horizontal concatenation of tensors with equal row counts.
inline Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols of nothing");
    const std::size_t rows = parts.front().rows();
    std::size_t cols = 0;
    for (const Var& p : parts) {
        if (p.rows() != rows) {
            throw std::invalid_argument("concat_cols: shape mismatch " + to_string(parts.front().shape()) + " vs " +
                                        to_string(p.shape()));
        }
        cols += p.cols();
    }
    Tensor out(rows, cols);
    std::vector<std::uint32_t> ids;
    std::size_t offset = 0;
    for (const Var& p : parts) {
        const Tensor& v = p.value();
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < v.cols(); ++c) out(r, offset + c) = v(r, c);
        offset += v.cols();
        ids.push_back(p.id);
    }
    return parts.front().tape->record(std::move(out), parts, [ids](Tape& t, std::uint32_t self) {
        const Tensor& g = t.grad(self);
        std::size_t offset = 0;
        for (std::uint32_t id : ids) {
            const std::size_t w = t.value(id).cols();
            if (Tensor* gp = t.grad_sink(id)) {
                for (std::size_t r = 0; r < g.rows(); ++r)
                    for (std::size_t c = 0; c < w; ++c) (*gp)(r, c) += g(r, offset + c);
            }
            offset += w;
        }
    });
}

/// Vertical concatenation of tensors with equal column counts.
inline Var concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_rows of nothing");
    const std::size_t cols = parts.front().cols();
    std::size_t rows = 0;
    for (const Var& p : parts) {
        if (p.cols() != cols) {
            throw std::invalid_argument("concat_rows: shape mismatch " + to_string(parts.front().shape()) + " vs " +
                                        to_string(p.shape()));
        }
        rows += p.rows();
    }
    std::vector<double> data;
    data.reserve(rows * cols);
    std::vector<std::uint32_t> ids;
    for (const Var& p : parts) {
        const auto vals = p.value().values();
        data.insert(data.end(), vals.begin(), vals.end());
        ids.push_back(p.id);
    }
    return parts.front().tape->record(Tensor(rows, cols, std::move(data)), parts, [ids](Tape& t, std::uint32_t self) {
        const Tensor& g = t.grad(self);
        std::size_t offset = 0;
        for (std::uint32_t id : ids) {
            const std::size_t n = t.value(id).size();
            if (Tensor* gp = t.grad_sink(id))
                for (std::size_t i = 0; i < n; ++i) (*gp)[i] += g[offset + i];
            offset += n;
        }
    });
}

/// Columns [begin, end) of `a`.
inline Var slice_cols(Var a, std::size_t begin, std::size_t end) {
    const Tensor& av = a.value();
    if (begin > end || end > av.cols()) {
        throw std::invalid_argument("slice_cols [" + std::to_string(begin) + "," + std::to_string(end) +
                                    ") out of range for " + to_string(av.shape()));
    }
    Tensor out(av.rows(), end - begin);
    for (std::size_t r = 0; r < av.rows(); ++r)
        for (std::size_t c = begin; c < end; ++c) out(r, c - begin) = av(r, c);
    return a.tape->record(std::move(out), {a}, [a_id = a.id, begin](Tape& t, std::uint32_t self) {
        if (Tensor* ga = t.grad_sink(a_id)) {
            const Tensor& g = t.grad(self);
            for (std::size_t r = 0; r < g.rows(); ++r)
                for (std::size_t c = 0; c < g.cols(); ++c) (*ga)(r, begin + c) += g(r, c);
        }
    });
}

/// Row gather: out[i] = table[indices[i]]. Gradients scatter-add back.
inline Var embedding_lookup(Var table, std::span<const std::size_t> indices) {
    const Tensor& tv = table.value();
    Tensor out(indices.size(), tv.cols());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= tv.rows()) {
            throw std::out_of_range("embedding_lookup: index " + std::to_string(indices[i]) + " outside table of " +
                                    std::to_string(tv.rows()) + " rows");
        }
        for (std::size_t c = 0; c < tv.cols(); ++c) out(i, c) = tv(indices[i], c);
    }
    std::vector<std::size_t> idx(indices.begin(), indices.end());
    return table.tape->record(std::move(out), {table}, [t_id = table.id, idx = std::move(idx)](Tape& t, std::uint32_t self) {
        if (Tensor* gt = t.grad_sink(t_id)) {
            const Tensor& g = t.grad(self);
            for (std::size_t i = 0; i < idx.size(); ++i)
                for (std::size_t c = 0; c < g.cols(); ++c) (*gt)(idx[i], c) += g(i, c);
        }
    });
}

/// Row-wise softmax restricted to entries where `mask` is nonzero. Masked
/// entries come out as exactly 0. Every row needs one unmasked entry.
inline Var masked_softmax(Var a, const Tensor& mask) {
    const Tensor& av = a.value();
    detail::require_same_shape("masked_softmax", av, mask);
    Tensor out(av.rows(), av.cols());
    for (std::size_t r = 0; r < av.rows(); ++r) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < av.cols(); ++c)
            if (mask(r, c) != 0.0) mx = std::max(mx, av(r, c));
        if (mx == -std::numeric_limits<double>::infinity()) {
            throw std::invalid_argument("masked_softmax: row " + std::to_string(r) + " is fully masked");
        }
        double z = 0.0;
        for (std::size_t c = 0; c < av.cols(); ++c) {
            if (mask(r, c) != 0.0) {
                out(r, c) = std::exp(av(r, c) - mx);
                z += out(r, c);
            }
        }
        for (std::size_t c = 0; c < av.cols(); ++c) out(r, c) /= z;
    }
    return a.tape->record(std::move(out), {a}, [a_id = a.id](Tape& t, std::uint32_t self) {
        Tensor* ga = t.grad_sink(a_id);
        if (ga == nullptr) return;
        const Tensor& g = t.grad(self);
        const Tensor& y = t.value(self);
        for (std::size_t r = 0; r < y.rows(); ++r) {
            double dot = 0.0;
            for (std::size_t c = 0; c < y.cols(); ++c) dot += y(r, c) * g(r, c);
            for (std::size_t c = 0; c < y.cols(); ++c) (*ga)(r, c) += y(r, c) * (g(r, c) - dot);
        }
    });
}

inline constexpr double kCosineEps = 1e-12;

/// Pairwise cosine similarity of the rows of `a` (n x d) and `b` (m x d).
/// Norms are clamped below at kCosineEps.
inline Tensor cosine_similarity(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.cols()) {
        throw std::invalid_argument("cosine_similarity: shape mismatch " + to_string(a.shape()) + " vs " +
                                    to_string(b.shape()));
    }
    auto norms = [](const Tensor& x) {
        std::vector<double> n(x.rows());
        for (std::size_t r = 0; r < x.rows(); ++r) {
            double s = 0.0;
            for (double v : x.row_view(r)) s += v * v;
            n[r] = std::max(std::sqrt(s), kCosineEps);
        }
        return n;
    };
    const auto na = norms(a);
    const auto nb = norms(b);
    Tensor out(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.rows(); ++j) {
            double dot = 0.0;
            for (std::size_t c = 0; c < a.cols(); ++c) dot += a(i, c) * b(j, c);
            out(i, j) = dot / (na[i] * nb[j]);
        }
    return out;
}

inline Var cosine_similarity(Var a, Var b) {
    Tensor out = cosine_similarity(a.value(), b.value());
    return a.tape->record(std::move(out), {a, b}, [a_id = a.id, b_id = b.id](Tape& t, std::uint32_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& av = t.value(a_id);
        const Tensor& bv = t.value(b_id);
        const Tensor& s = t.value(self);
        auto norm = [](const Tensor& x, std::size_t r, bool& clamped) {
            double sq = 0.0;
            for (double v : x.row_view(r)) sq += v * v;
            const double n = std::sqrt(sq);
            clamped = n <= kCosineEps;
            return std::max(n, kCosineEps);
        };
        std::vector<double> na(av.rows()), nb(bv.rows());
        std::vector<char> ca(av.rows()), cb(bv.rows());
        for (std::size_t i = 0; i < av.rows(); ++i) {
            bool c = false;
            na[i] = norm(av, i, c);
            ca[i] = c;
        }
        for (std::size_t j = 0; j < bv.rows(); ++j) {
            bool c = false;
            nb[j] = norm(bv, j, c);
            cb[j] = c;
        }
        Tensor* ga = t.grad_sink(a_id);
        Tensor* gb = t.grad_sink(b_id);
        for (std::size_t i = 0; i < av.rows(); ++i)
            for (std::size_t j = 0; j < bv.rows(); ++j) {
                const double gij = g(i, j);
                if (gij == 0.0) continue;
                const double inv = 1.0 / (na[i] * nb[j]);
                for (std::size_t c = 0; c < av.cols(); ++c) {
                    if (ga != nullptr) {
                        double d = bv(j, c) * inv;
                        if (!ca[i]) d -= s(i, j) * av(i, c) / (na[i] * na[i]);
                        (*ga)(i, c) += gij * d;
                    }
                    if (gb != nullptr) {
                        double d = av(i, c) * inv;
                        if (!cb[j]) d -= s(i, j) * bv(j, c) / (nb[j] * nb[j]);
                        (*gb)(j, c) += gij * d;
                    }
                }
            }
    });
}

/// Row sums: (n x c) -> (n x 1).
inline Var sum_cols(Var a) {
    const Tensor& av = a.value();
    Tensor out(av.rows(), 1);
    for (std::size_t r = 0; r < av.rows(); ++r)
        for (double v : av.row_view(r)) out(r, 0) += v;
    return a.tape->record(std::move(out), {a}, [a_id = a.id](Tape& t, std::uint32_t self) {
        if (Tensor* ga = t.grad_sink(a_id)) {
            const Tensor& g = t.grad(self);
            for (std::size_t r = 0; r < ga->rows(); ++r)
                for (std::size_t c = 0; c < ga->cols(); ++c) (*ga)(r, c) += g(r, 0);
        }
    });
}

/// Same data, new shape (row-major order is kept).
inline Var reshape(Var a, std::size_t rows, std::size_t cols) {
    const Tensor& av = a.value();
    if (rows * cols != av.size()) {
        throw std::invalid_argument("reshape: cannot view " + to_string(av.shape()) + " as " +
                                    to_string(Shape{rows, cols}));
    }
    Tensor out(rows, cols, std::vector<double>(av.values().begin(), av.values().end()));
    return a.tape->record(std::move(out), {a}, [a_id = a.id](Tape& t, std::uint32_t self) {
        if (Tensor* ga = t.grad_sink(a_id)) {
            const Tensor& g = t.grad(self);
            for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
        }
    });
}

/// Multiplies row r of `a` by s(r, 0).
inline Var scale_rows(Var a, Var s) {
    const Tensor& av = a.value();
    const Tensor& sv = s.value();
    if (sv.rows() != av.rows() || sv.cols() != 1) {
        throw std::invalid_argument("scale_rows: shape mismatch " + to_string(av.shape()) + " vs " +
                                    to_string(sv.shape()));
    }
    Tensor out = av;
    for (std::size_t r = 0; r < out.rows(); ++r)
        for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) *= sv(r, 0);
    return a.tape->record(std::move(out), {a, s}, [a_id = a.id, s_id = s.id](Tape& t, std::uint32_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& av = t.value(a_id);
        const Tensor& sv = t.value(s_id);
        if (Tensor* ga = t.grad_sink(a_id))
            for (std::size_t r = 0; r < g.rows(); ++r)
                for (std::size_t c = 0; c < g.cols(); ++c) (*ga)(r, c) += g(r, c) * sv(r, 0);
        if (Tensor* gs = t.grad_sink(s_id))
            for (std::size_t r = 0; r < g.rows(); ++r)
                for (std::size_t c = 0; c < g.cols(); ++c) (*gs)(r, 0) += g(r, c) * av(r, c);
    });
}

}  // namespace rigl::ops
