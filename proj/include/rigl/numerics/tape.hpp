// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "rigl/numerics/tensor.hpp"

namespace rigl {

/// A named trainable tensor together with its accumulated gradient.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;
};

/// Insertion-ordered collection of parameters with stable addresses.
class ParameterSet {
   public:
    Parameter& add(std::string name, Tensor value) {
        if (index_.count(name) != 0) throw std::invalid_argument("duplicate parameter '" + name + "'");
        auto p = std::make_unique<Parameter>();
        p->name = name;
        p->grad = Tensor(value.rows(), value.cols());
        p->value = std::move(value);
        index_.emplace(std::move(name), params_.size());
        params_.push_back(std::move(p));
        return *params_.back();
    }

    Parameter& at(const std::string& name) {
        auto it = index_.find(name);
        if (it == index_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
        return *params_[it->second];
    }
    const Parameter& at(const std::string& name) const {
        return const_cast<ParameterSet*>(this)->at(name);
    }
    bool contains(const std::string& name) const { return index_.count(name) != 0; }

    std::size_t size() const { return params_.size(); }
    Parameter& operator[](std::size_t i) { return *params_[i]; }
    const Parameter& operator[](std::size_t i) const { return *params_[i]; }

    std::size_t scalar_count() const {
        std::size_t n = 0;
        for (const auto& p : params_) n += p->value.size();
        return n;
    }

    void zero_grad() {
        for (auto& p : params_) p->grad.fill(0.0);
    }

    /// Copies values only; names and shapes must match.
    void assign_values(const ParameterSet& other) {
        if (other.size() != size()) throw std::invalid_argument("parameter set size mismatch");
        for (std::size_t i = 0; i < size(); ++i) {
            if (other[i].value.shape() != params_[i]->value.shape()) {
                throw std::invalid_argument("shape mismatch for parameter '" + params_[i]->name + "'");
            }
            params_[i]->value = other[i].value;
        }
    }

   private:
    std::vector<std::unique_ptr<Parameter>> params_;
    std::map<std::string, std::size_t> index_;
};

class Tape;

/// Handle to a node recorded on a Tape.
struct Var {
    Tape* tape = nullptr;
    std::uint32_t id = 0;

    const Tensor& value() const;
    Shape shape() const { return value().shape(); }
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }
    double item() const { return value()[0]; }
};

/// Append-only record of operations. Backward walks it once in reverse.
class Tape {
   public:
    using BackwardFn = std::function<void(Tape&, std::uint32_t self)>;

    /// With `record_grad` off, parameters enter as constants and no closures are kept.
    explicit Tape(bool record_grad = true) : record_grad_(record_grad) {}
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor value) { return push(std::move(value), nullptr, false, nullptr); }

    /// Leaf bound to a parameter. Repeated calls in one tape return the same node.
    Var leaf(Parameter& p) {
        if (!record_grad_) return constant(p.value);
        auto it = leaves_.find(&p);
        if (it != leaves_.end()) return Var{this, it->second};
        Var v = push(p.value, nullptr, true, &p);
        leaves_.emplace(&p, v.id);
        return v;
    }

    /// Records an op result. The closure runs only when some parent needs a gradient.
    Var record(Tensor value, std::initializer_list<Var> parents, BackwardFn fn) {
        bool needs = false;
        for (const Var& p : parents) {
            check_owned(p);
            needs = needs || nodes_[p.id].requires_grad;
        }
        return push(std::move(value), needs ? std::move(fn) : nullptr, needs, nullptr);
    }
    Var record(Tensor value, const std::vector<Var>& parents, BackwardFn fn) {
        bool needs = false;
        for (const Var& p : parents) {
            check_owned(p);
            needs = needs || nodes_[p.id].requires_grad;
        }
        return push(std::move(value), needs ? std::move(fn) : nullptr, needs, nullptr);
    }

    const Tensor& value(std::uint32_t id) const { return nodes_.at(id).value; }
    bool requires_grad(std::uint32_t id) const { return nodes_.at(id).requires_grad; }

    /// Gradient of `id`; zero tensor when nothing flowed into it.
    const Tensor& grad(std::uint32_t id) {
        Node& n = nodes_.at(id);
        if (n.grad.shape() != n.value.shape()) n.grad = Tensor(n.value.rows(), n.value.cols());
        return n.grad;
    }

    /// Gradient buffer a backward closure adds into, or nullptr for constants.
    Tensor* grad_sink(std::uint32_t id) {
        Node& n = nodes_[id];
        if (!n.requires_grad) return nullptr;
        if (n.grad.shape() != n.value.shape()) n.grad = Tensor(n.value.rows(), n.value.cols());
        return &n.grad;
    }

    /// Propagates d(loss)/d(node) for every node and adds leaf gradients into
    /// their parameters. A tape can be differentiated once; call reset() to reuse it.
    void backward(Var loss) {
        check_owned(loss);
        if (consumed_) throw std::logic_error("backward called twice on the same tape without reset");
        if (nodes_.empty()) throw std::logic_error("backward on an empty tape");
        if (loss.value().size() != 1) {
            throw std::invalid_argument("backward requires a scalar loss, got " + to_string(loss.shape()));
        }
        consumed_ = true;
        if (!nodes_[loss.id].requires_grad) return;
        nodes_[loss.id].grad = Tensor(1, 1, 1.0);
        for (std::int64_t i = loss.id; i >= 0; --i) {
            Node& n = nodes_[static_cast<std::size_t>(i)];
            if (!n.requires_grad || n.grad.empty()) continue;
            if (n.backward) n.backward(*this, static_cast<std::uint32_t>(i));
            if (n.param != nullptr) n.param->grad += n.grad;
        }
    }

    void reset() {
        nodes_.clear();
        leaves_.clear();
        consumed_ = false;
    }

    std::size_t size() const { return nodes_.size(); }
    bool records_grad() const { return record_grad_; }

   private:
    struct Node {
        Tensor value;
        Tensor grad;
        BackwardFn backward;
        Parameter* param = nullptr;
        bool requires_grad = false;
    };

    Var push(Tensor value, BackwardFn fn, bool requires_grad, Parameter* param) {
        if (consumed_) throw std::logic_error("recording on a tape that was already differentiated");
        nodes_.push_back(Node{std::move(value), Tensor(), std::move(fn), param, requires_grad});
        return Var{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
    }

    void check_owned(const Var& v) const {
        if (v.tape != this || v.id >= nodes_.size()) throw std::invalid_argument("variable belongs to another tape");
    }

    std::vector<Node> nodes_;
    std::unordered_map<const Parameter*, std::uint32_t> leaves_;
    bool record_grad_ = true;
    bool consumed_ = false;
};

inline const Tensor& Var::value() const { return tape->value(id); }

}  // namespace rigl
