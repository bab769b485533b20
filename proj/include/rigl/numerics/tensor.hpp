// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rigl {

/// Rows x columns. Every tensor in the model is a matrix; vectors are 1 x n.
using Shape = std::array<std::size_t, 2>;

inline std::string to_string(const Shape& shape) {
    return "[" + std::to_string(shape[0]) + "x" + std::to_string(shape[1]) + "]";
}

/// Dense row-major matrix of 64-bit reals.
class Tensor {
   public:
    Tensor() = default;

    Tensor(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_) {
            throw std::invalid_argument("tensor data length " + std::to_string(data_.size()) +
                                        " does not match shape " + to_string(shape()));
        }
    }

    Tensor(std::initializer_list<std::initializer_list<double>> rows) {
        rows_ = rows.size();
        cols_ = rows_ == 0 ? 0 : rows.begin()->size();
        data_.reserve(rows_ * cols_);
        for (const auto& row : rows) {
            if (row.size() != cols_) throw std::invalid_argument("ragged tensor literal");
            data_.insert(data_.end(), row.begin(), row.end());
        }
    }

    static Tensor row(std::span<const double> values) {
        return Tensor(1, values.size(), std::vector<double>(values.begin(), values.end()));
    }

    static Tensor identity(std::size_t n) {
        Tensor t(n, n);
        for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
        return t;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    Shape shape() const { return {rows_, cols_}; }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }
    std::span<const double> row_view(std::size_t r) const {
        return std::span<const double>(data_).subspan(r * cols_, cols_);
    }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    /// Elementwise `this += other`; shapes must agree.
    Tensor& operator+=(const Tensor& other) {
        if (other.shape() != shape()) {
            throw std::invalid_argument("shape mismatch " + to_string(shape()) + " vs " +
                                        to_string(other.shape()));
        }
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
        return *this;
    }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    friend bool operator==(const Tensor&, const Tensor&) = default;

   private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline Tensor transposed(const Tensor& t) {
    Tensor out(t.cols(), t.rows());
    for (std::size_t r = 0; r < t.rows(); ++r)
        for (std::size_t c = 0; c < t.cols(); ++c) out(c, r) = t(r, c);
    return out;
}

/// Plain dense product, used by graph construction and by the tape ops.
inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows()) {
        throw std::invalid_argument("matmul shape mismatch " + to_string(a.shape()) + " x " +
                                    to_string(b.shape()));
    }
    Tensor out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
        }
    }
    return out;
}

}  // namespace rigl
