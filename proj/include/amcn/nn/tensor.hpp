#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <vector>

#include "amcn/error.hpp"

// Minimal reverse-mode differentiation engine. Tensors are handles to graph
// nodes; operations build new nodes that remember their parents and how to
// push gradients back to them. The scalar type is a template parameter:
// float for training and inference, double for finite-difference checking.

namespace amcn::nn {

using Shape = std::vector<int>;

inline std::size_t numel(const Shape& s) {
    std::size_t n = 1;
    for (int d : s) n *= static_cast<std::size_t>(d);
    return n;
}

inline bool same_shape(const Shape& a, const Shape& b) { return a == b; }

inline std::string shape_str(const Shape& s) {
    std::string out = "(";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + ")";
}

template <typename T>
struct Node {
    Shape shape;
    std::vector<T> value;
    std::vector<T> grad;  // allocated during backward for grad-requiring nodes
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;
};

template <typename T>
class Tensor {
public:
    Tensor() = default;

    static Tensor leaf(Shape shape, std::vector<T> values, bool requires_grad = false) {
        if (values.size() != numel(shape)) {
            throw DimensionError("tensor value count does not match shape " + shape_str(shape));
        }
        auto n = std::make_shared<Node<T>>();
        n->shape = std::move(shape);
        n->value = std::move(values);
        n->requires_grad = requires_grad;
        return Tensor(std::move(n));
    }

    static Tensor zeros(Shape shape, bool requires_grad = false) {
        std::vector<T> v(numel(shape), T(0));
        return leaf(std::move(shape), std::move(v), requires_grad);
    }

    static Tensor full(Shape shape, T value, bool requires_grad = false) {
        std::vector<T> v(numel(shape), value);
        return leaf(std::move(shape), std::move(v), requires_grad);
    }

    bool defined() const { return static_cast<bool>(node_); }
    const Shape& shape() const { return node_->shape; }
    int dim(int i) const { return node_->shape[static_cast<std::size_t>(i)]; }
    std::size_t size() const { return node_->value.size(); }
    bool requires_grad() const { return node_->requires_grad; }

    const std::vector<T>& values() const { return node_->value; }
    // Mutation is only meaningful on leaves (parameters, finite-difference
    // probes); graphs built afterwards see the updated values.
    std::vector<T>& values_mut() { return node_->value; }

    const std::vector<T>& grad() const {
        if (node_->grad.size() != node_->value.size()) {
            throw InvalidArgument("gradient not populated; run backward first");
        }
        return node_->grad;
    }

    T item() const {
        if (size() != 1) throw InvalidArgument("item() requires a scalar tensor");
        return node_->value[0];
    }

    // Reverse-mode sweep from this scalar. Gradients of every reachable
    // grad-requiring node are reset and repopulated, so parameters carry
    // exactly the gradients of this loss afterwards.
    void backward() const {
        if (size() != 1) throw InvalidArgument("backward() requires a scalar loss");
        std::vector<Node<T>*> topo;
        std::unordered_set<Node<T>*> seen;
        std::vector<std::pair<Node<T>*, std::size_t>> stack;
        stack.emplace_back(node_.get(), 0);
        seen.insert(node_.get());
        while (!stack.empty()) {
            auto& [n, next] = stack.back();
            if (next < n->parents.size()) {
                Node<T>* p = n->parents[next++].get();
                if (p->requires_grad && seen.insert(p).second) {
                    stack.emplace_back(p, 0);
                }
            } else {
                topo.push_back(n);
                stack.pop_back();
            }
        }
        for (Node<T>* n : topo) {
            n->grad.assign(n->value.size(), T(0));
        }
        node_->grad[0] = T(1);
        // `topo` is in reverse topological order already (children first
        // would be wrong; DFS post-order puts the root last), so iterate
        // from the back: root first, then its ancestors' dependents.
        for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
            Node<T>* n = *it;
            if (n->backward_fn) n->backward_fn(*n);
        }
    }

    std::shared_ptr<Node<T>> node() const { return node_; }

    explicit Tensor(std::shared_ptr<Node<T>> n) : node_(std::move(n)) {}

private:
    std::shared_ptr<Node<T>> node_;
};

namespace detail {

// Builds an op node. `backward_fn` receives the finished node and is
// expected to accumulate into parents' grads (guarding on requires_grad).
template <typename T>
Tensor<T> make_op(Shape shape, std::vector<T> value,
                  std::vector<std::shared_ptr<Node<T>>> parents,
                  std::function<void(Node<T>&)> backward_fn, const char* op_name) {
    if (value.size() != numel(shape)) {
        throw DimensionError(std::string(op_name) + ": output size mismatch");
    }
    for (const T& v : value) {
        if (!std::isfinite(v)) {
            throw NumericError(std::string(op_name) + " produced a non-finite value");
        }
    }
    auto n = std::make_shared<Node<T>>();
    n->shape = std::move(shape);
    n->value = std::move(value);
    n->parents = std::move(parents);
    for (const auto& p : n->parents) {
        if (p->requires_grad) {
            n->requires_grad = true;
            break;
        }
    }
    if (n->requires_grad) n->backward_fn = std::move(backward_fn);
    return Tensor<T>(std::move(n));
}

}  // namespace detail

}  // namespace amcn::nn
