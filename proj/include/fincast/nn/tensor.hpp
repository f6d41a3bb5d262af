#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace fincast::nn {

enum class Mode { train, eval };

inline std::size_t numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

inline std::string shape_str(const std::vector<std::size_t>& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

/// Dense n-d array participating in reverse-mode differentiation.
///
/// A Tensor is a shared handle to a graph node: ops create fresh nodes that
/// remember their parents and a backward closure. Calling backward() on a
/// scalar output walks the graph in reverse topological order and accumulates
/// gradients into every node with requires_grad set. Leaf gradients persist
/// across backward calls until explicitly cleared (the optimizer does this).
template <typename T>
class Tensor {
public:
    struct Node {
        std::vector<std::size_t> shape;
        std::vector<T> values;
        std::vector<T> grad;  // empty until first needed; same length as values after
        bool requires_grad = false;
        std::vector<std::shared_ptr<Node>> parents;
        std::function<void(Node&)> backward_fn;
    };

    Tensor() = default;

    bool defined() const { return n_ != nullptr; }

    static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false) {
        return from_values(std::move(shape), {}, requires_grad, true);
    }

    static Tensor full(std::vector<std::size_t> shape, T value, bool requires_grad = false) {
        auto t = zeros(std::move(shape), requires_grad);
        for (auto& v : t.values()) v = value;
        return t;
    }

    static Tensor from_values(std::vector<std::size_t> shape, std::vector<T> values,
                              bool requires_grad = false, bool zero_fill = false) {
        auto node = std::make_shared<Node>();
        const std::size_t n = numel(shape);
        if (zero_fill)
            values.assign(n, T(0));
        else if (values.size() != n)
            throw std::invalid_argument("tensor: " + std::to_string(values.size()) +
                                        " values for shape " + shape_str(shape));
        node->shape = std::move(shape);
        node->values = std::move(values);
        node->requires_grad = requires_grad;
        Tensor t;
        t.n_ = std::move(node);
        return t;
    }

    /// Build an op result node. requires_grad is inherited from the parents;
    /// the backward closure receives the finished node (its grad seeded).
    static Tensor make(std::vector<std::size_t> shape, std::vector<T>&& values,
                       std::vector<Tensor> parents, std::function<void(Node&)> backward_fn) {
        Tensor t = from_values(std::move(shape), std::move(values));
        bool req = false;
        for (const auto& p : parents) req = req || p.requires_grad();
        if (req) {
            t.n_->requires_grad = true;
            t.n_->parents.reserve(parents.size());
            for (auto& p : parents) t.n_->parents.push_back(p.n_);
            t.n_->backward_fn = std::move(backward_fn);
        }
        return t;
    }

    const std::vector<std::size_t>& shape() const { return n_->shape; }
    std::size_t rank() const { return n_->shape.size(); }
    std::size_t dim(std::size_t i) const { return n_->shape[i]; }
    std::size_t size() const { return n_->values.size(); }

    std::vector<T>& values() { return n_->values; }
    const std::vector<T>& values() const { return n_->values; }

    bool requires_grad() const { return n_->requires_grad; }
    void set_requires_grad(bool b) { n_->requires_grad = b; }

    static void ensure_grad(Node& node) {
        if (node.grad.size() != node.values.size()) node.grad.assign(node.values.size(), T(0));
    }

    std::vector<T>& grad() {
        ensure_grad(*n_);
        return n_->grad;
    }
    const std::vector<T>& grad() const {
        ensure_grad(*n_);
        return n_->grad;
    }

    void zero_grad() { n_->grad.assign(n_->values.size(), T(0)); }

    T item() const {
        if (size() != 1) throw std::logic_error("item() on non-scalar tensor");
        return n_->values[0];
    }

    Node* node() const { return n_.get(); }

    /// Reverse-mode sweep from a scalar output.
    void backward() {
        if (size() != 1) throw std::logic_error("backward() requires a scalar output");
        if (!n_->requires_grad) return;

        // iterative post-order DFS
        std::vector<Node*> order;
        std::unordered_set<Node*> visited;
        std::vector<std::pair<Node*, std::size_t>> stack;
        stack.emplace_back(n_.get(), 0);
        visited.insert(n_.get());
        while (!stack.empty()) {
            auto& [node, idx] = stack.back();
            if (idx < node->parents.size()) {
                Node* parent = node->parents[idx++].get();
                if (parent->requires_grad && visited.insert(parent).second)
                    stack.emplace_back(parent, 0);
            } else {
                order.push_back(node);
                stack.pop_back();
            }
        }

        for (Node* node : order) ensure_grad(*node);
        n_->grad[0] += T(1);
        for (auto it = order.rbegin(); it != order.rend(); ++it)
            if ((*it)->backward_fn) (*it)->backward_fn(**it);
    }

private:
    std::shared_ptr<Node> n_;
};

}  // namespace fincast::nn
