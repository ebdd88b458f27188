#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <unordered_map>
#include <vector>

#include "sgdr/tensor.hpp"

namespace sgdr {

// Reverse-mode autodiff over a dynamically built DAG. Each forward op
// allocates a Node holding the computed value and a closure that maps the
// node's output gradient into its parents' gradient buffers. Graphs are
// built eagerly (values computed at construction) and freed when the last
// Var referencing the root goes away.
//
// Ownership: nodes own their parents via shared_ptr; backward closures only
// capture raw pointers, so there are no reference cycles.

template <class T>
struct Node;

template <class T>
using Var = std::shared_ptr<Node<T>>;

template <class T>
struct Node {
    Tensor<T> value;
    std::vector<Var<T>> parents;
    // parent_grads[i] is null when parents[i] does not require grad.
    std::function<void(const Tensor<T>& grad, const std::vector<Tensor<T>*>& parent_grads)>
        backward;
    bool needs_grad = false;
    int param_slot = -1;  // >= 0 for trainable parameters
    std::uint64_t seq = 0;

    bool is_param() const { return param_slot >= 0; }
};

namespace detail {
inline std::atomic<std::uint64_t>& node_counter() {
    static std::atomic<std::uint64_t> c{0};
    return c;
}
}  // namespace detail

template <class T>
Var<T> make_node(Tensor<T> value, std::vector<Var<T>> parents) {
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(value);
    n->parents = std::move(parents);
    for (const auto& p : n->parents) {
        if (p && p->needs_grad) n->needs_grad = true;
    }
    n->seq = detail::node_counter().fetch_add(1, std::memory_order_relaxed);
    return n;
}

// Constant leaf (inputs, targets, injected noise).
template <class T>
Var<T> make_const(Tensor<T> value) {
    return make_node<T>(std::move(value), {});
}

// Trainable leaf; slot indexes into GradBuffer.
template <class T>
Var<T> make_param(Tensor<T> value, int slot) {
    auto n = make_const<T>(std::move(value));
    n->needs_grad = true;
    n->param_slot = slot;
    return n;
}

// Cuts the graph: same value, no gradient path.
template <class T>
Var<T> detach(const Var<T>& v) {
    return make_const<T>(v->value);
}

// Per-slot parameter gradient accumulator. One instance per worker thread;
// buffers are merged in a fixed order afterwards, which keeps multi-threaded
// training bit-deterministic.
template <class T>
struct GradBuffer {
    std::vector<Tensor<T>> slots;

    explicit GradBuffer(std::size_t n_params = 0) : slots(n_params) {}

    void ensure(int slot, const std::vector<int>& shape) {
        if (slots[static_cast<std::size_t>(slot)].numel() == 0) {
            slots[static_cast<std::size_t>(slot)] = Tensor<T>(shape);
        }
    }

    void add_from(const GradBuffer& other) {
        for (std::size_t i = 0; i < slots.size(); ++i) {
            if (other.slots[i].numel() == 0) continue;
            if (slots[i].numel() == 0) {
                slots[i] = other.slots[i];
            } else {
                for (std::size_t k = 0; k < slots[i].numel(); ++k) {
                    slots[i].data[k] += other.slots[i].data[k];
                }
            }
        }
    }

    void clear() {
        for (auto& t : slots) t = Tensor<T>();
    }
};

// Backpropagate from a scalar root. `seed` scales the whole gradient
// (pass 1/batch_size to average per-sample losses). Parameter gradients are
// accumulated into `sink`; activation gradients live only for the call.
template <class T>
void backward(const Var<T>& root, T seed, GradBuffer<T>& sink) {
    if (!root->needs_grad) return;
    if (root->value.numel() != 1) throw ShapeError("backward: root must be scalar");

    // Collect the reachable grad-requiring subgraph.
    std::vector<Node<T>*> order;
    std::unordered_map<Node<T>*, Tensor<T>> grads;
    {
        std::vector<Node<T>*> stack{root.get()};
        std::unordered_map<Node<T>*, bool> seen;
        seen.reserve(1024);
        while (!stack.empty()) {
            Node<T>* n = stack.back();
            stack.pop_back();
            if (seen[n]) continue;
            seen[n] = true;
            order.push_back(n);
            for (const auto& p : n->parents) {
                if (p && p->needs_grad && !seen[p.get()]) stack.push_back(p.get());
            }
        }
    }
    // Creation order is a topological order for eagerly built graphs.
    std::sort(order.begin(), order.end(),
              [](const Node<T>* a, const Node<T>* b) { return a->seq > b->seq; });

    grads.reserve(order.size());
    {
        Tensor<T> g({1});
        g[0] = seed;
        grads[root.get()] = std::move(g);
    }

    std::vector<Tensor<T>*> parent_ptrs;
    for (Node<T>* n : order) {
        auto it = grads.find(n);
        if (it == grads.end()) continue;  // no gradient flowed here
        Tensor<T>& g = it->second;
        if (n->is_param()) {
            sink.ensure(n->param_slot, n->value.shape);
            Tensor<T>& acc = sink.slots[static_cast<std::size_t>(n->param_slot)];
            for (std::size_t k = 0; k < g.numel(); ++k) acc.data[k] += g.data[k];
            grads.erase(it);
            continue;
        }
        if (!n->backward) {
            grads.erase(it);
            continue;  // constant leaf
        }
        parent_ptrs.clear();
        parent_ptrs.reserve(n->parents.size());
        for (const auto& p : n->parents) {
            if (p && p->needs_grad) {
                auto& slot = grads[p.get()];
                if (slot.numel() == 0) slot = Tensor<T>(p->value.shape);
                parent_ptrs.push_back(&slot);
            } else {
                parent_ptrs.push_back(nullptr);
            }
        }
        n->backward(g, parent_ptrs);
        // Erase by key: inserting parent slots above may invalidate `it`,
        // but pointers/references to mapped values stay valid.
        grads.erase(n);
    }
}

}  // namespace sgdr
