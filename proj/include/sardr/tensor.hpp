// tensor.hpp — dense double-precision tensors with reverse-mode differentiation.
//
// Differentiation is define-by-run: every primitive op allocates a node that
// remembers its inputs and an adjoint rule. backward() linearizes the graph
// reachable from a scalar root in topological order and sweeps it in reverse,
// accumulating dL/dx into every leaf created with requires_grad.
//
// Double precision throughout: the finite-difference checks that gate this
// library are unreliable in single precision.
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "sardr/errors.hpp"

namespace sardr {

using Shape = std::vector<std::int64_t>;

inline std::int64_t shape_numel(const Shape& s) {
    std::int64_t n = 1;
    for (std::int64_t d : s) {
        if (d < 0) throw ShapeError("negative dimension in shape");
        n *= d;
    }
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << "]";
    return os.str();
}

struct TensorNode {
    Shape shape;
    std::vector<double> value;
    bool requires_grad = false;  // leaf that wants dL/dx
    bool needs_grad = false;     // this node lies on a path to such a leaf
    const char* op = "leaf";
    std::vector<std::shared_ptr<TensorNode>> inputs;
    // Adjoint rule: gout is dL/d(this), gin[i] is the accumulation buffer for
    // inputs[i] (nullptr when that input does not need gradients).
    std::function<void(const double* gout, const std::vector<double*>& gin)> backward;
};

class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<TensorNode> n) : node_(std::move(n)) {}

    static Tensor from(std::vector<double> data, Shape shape, bool requires_grad = false) {
        if (static_cast<std::int64_t>(data.size()) != shape_numel(shape))
            throw ShapeError("data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_str(shape));
        auto n = std::make_shared<TensorNode>();
        n->shape = std::move(shape);
        n->value = std::move(data);
        n->requires_grad = requires_grad;
        n->needs_grad = requires_grad;
        return Tensor(n);
    }

    static Tensor zeros(Shape shape, bool requires_grad = false) {
        std::vector<double> d(static_cast<std::size_t>(shape_numel(shape)), 0.0);
        return from(std::move(d), std::move(shape), requires_grad);
    }

    static Tensor full(Shape shape, double v, bool requires_grad = false) {
        std::vector<double> d(static_cast<std::size_t>(shape_numel(shape)), v);
        return from(std::move(d), std::move(shape), requires_grad);
    }

    static Tensor scalar(double v, bool requires_grad = false) {
        return from({v}, {}, requires_grad);
    }

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t size() const { return node_->value.size(); }
    const std::vector<double>& data() const { return node_->value; }
    std::vector<double>& mutable_data() { return node_->value; }
    bool requires_grad() const { return node_->requires_grad; }
    bool needs_grad() const { return node_ && node_->needs_grad; }
    const char* op() const { return node_->op; }
    TensorNode* node() const { return node_.get(); }
    std::shared_ptr<TensorNode> node_ptr() const { return node_; }

    double item() const {
        if (size() != 1) throw ContractError("item(): tensor has " + std::to_string(size()) + " elements");
        return node_->value[0];
    }

    // A view of the same data that never propagates gradients.
    Tensor detach() const {
        auto n = std::make_shared<TensorNode>();
        n->shape = node_->shape;
        n->value = node_->value;
        return Tensor(n);
    }

private:
    std::shared_ptr<TensorNode> node_;
};

// dL/d(leaf) for every requires_grad leaf reached by backward().
class GradientMap {
public:
    bool contains(const Tensor& t) const { return grads_.count(t.node()) != 0; }
    const Tensor& at(const Tensor& t) const {
        auto it = grads_.find(t.node());
        if (it == grads_.end()) throw ContractError("gradient map has no entry for this tensor");
        return it->second;
    }
    std::size_t size() const { return grads_.size(); }
    bool empty() const { return grads_.empty(); }
    void insert(const TensorNode* key, Tensor grad) { grads_.emplace(key, std::move(grad)); }

private:
    std::unordered_map<const TensorNode*, Tensor> grads_;
};

// Reverse sweep from a scalar root. Accumulation is a sum over all paths;
// identical inputs give bitwise-identical gradients (sequential, fixed order).
inline GradientMap backward(const Tensor& root) {
    if (!root.defined() || root.size() != 1)
        throw ContractError("backward: root must be a defined scalar tensor");

    GradientMap out;
    if (!root.node()->needs_grad) return out;  // detached root -> empty map

    // Topological order over needs_grad nodes (iterative DFS).
    std::vector<TensorNode*> order;
    std::unordered_set<TensorNode*> visited;
    std::vector<std::pair<TensorNode*, std::size_t>> stack;
    stack.push_back({root.node(), 0});
    visited.insert(root.node());
    while (!stack.empty()) {
        auto& [n, i] = stack.back();
        if (i < n->inputs.size()) {
            TensorNode* in = n->inputs[i++].get();
            if (in->needs_grad && !visited.count(in)) {
                visited.insert(in);
                stack.push_back({in, 0});
            }
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }

    std::unordered_map<TensorNode*, std::vector<double>> grad;
    grad[root.node()] = {1.0};

    // order is post-order, so iterating it backwards visits every consumer
    // before its producers.
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        TensorNode* n = *it;
        auto git = grad.find(n);
        if (git == grad.end()) continue;  // unreachable from root's adjoint
        std::vector<double> g = std::move(git->second);
        grad.erase(git);  // fully accumulated; free eagerly
        if (n->backward) {
            std::vector<double*> gin(n->inputs.size(), nullptr);
            for (std::size_t k = 0; k < n->inputs.size(); ++k) {
                TensorNode* in = n->inputs[k].get();
                if (!in->needs_grad) continue;
                auto& buf = grad[in];
                if (buf.empty()) buf.assign(in->value.size(), 0.0);
                gin[k] = buf.data();
            }
            n->backward(g.data(), gin);
        }
        if (n->requires_grad && !n->backward && n->inputs.empty()) {
            out.insert(n, Tensor::from(std::move(g), n->shape));
        }
    }
    return out;
}

}  // namespace sardr
