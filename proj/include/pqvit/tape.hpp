#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "pqvit/tensor.hpp"

namespace pqvit {

// Reverse-mode autodiff over a linear tape. Every op records a closure that
// scatters adjoints into its operands; backward() replays them in reverse
// execution order.
class Tape {
public:
    using NodeId = std::size_t;

    NodeId input(Tensor value);

    const Tensor& value(NodeId id) const { return nodes_[id].value; }
    const Tensor& grad(NodeId id) const { return nodes_[id].grad; }
    std::size_t node_count() const { return nodes_.size(); }

    NodeId matmul(NodeId a, NodeId b);
    NodeId add(NodeId a, NodeId b);                 // same shape
    NodeId add_rowvec(NodeId m, NodeId v);          // broadcast rank-1 v over rows of m
    NodeId scale(NodeId a, double s);
    NodeId transpose(NodeId a);
    NodeId softmax_rows(NodeId a);
    NodeId layer_norm(NodeId x, NodeId gamma, NodeId beta, double eps);
    NodeId gelu(NodeId a);
    NodeId concat_rows(const std::vector<NodeId>& parts);
    NodeId slice_rows(NodeId a, std::size_t start, std::size_t len);
    NodeId slice_cols(NodeId a, std::size_t start, std::size_t len);
    NodeId sum(NodeId a);                           // scalar
    NodeId cross_entropy(NodeId logits, std::size_t label);  // rank-1 or 1xK logits

    // Seeds the scalar loss adjoint with 1 and replays the tape backwards.
    void backward(NodeId loss);

private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::function<void()> backprop;  // empty for leaves
    };

    NodeId push(Tensor value, std::function<void()> backprop);
    Tensor& g(NodeId id) { return nodes_[id].grad; }

    std::vector<Node> nodes_;
};

}  // namespace pqvit
