#pragma once

#include <functional>
#include <vector>

#include "ctaes/mat.hpp"

namespace ctaes {

// Reverse-mode autodiff tape over Mat nodes. One Graph per forward pass;
// node ids are indices into the tape, already in topological order.
//
// Frozen quantities (token embeddings, gold scores, masks, backend weights)
// enter as constant leaves, so "no gradient ever reaches the backend" holds
// by construction.
class Graph {
public:
    using NodeId = int;

    NodeId leaf(Mat value, bool requires_grad = false);
    NodeId constant(Mat value) { return leaf(std::move(value), false); }

    // ---- ops ----
    NodeId matmul(NodeId a, NodeId b);
    NodeId transpose(NodeId a);
    NodeId add(NodeId a, NodeId b);     // same shape
    NodeId sub(NodeId a, NodeId b);     // same shape
    NodeId mul(NodeId a, NodeId b);     // elementwise
    NodeId scale(NodeId a, double s);
    NodeId add_rowvec(NodeId a, NodeId row); // broadcast 1xC over rows
    NodeId relu(NodeId a);
    NodeId sigmoid(NodeId a);
    NodeId one_minus(NodeId a);         // 1 - x elementwise
    NodeId log_clamped(NodeId a, double floor = 1e-12);
    NodeId softmax_rows(NodeId a);
    NodeId sum(NodeId a);               // -> 1x1
    NodeId mean_rows(NodeId a);         // RxC -> 1xC
    NodeId concat_cols(NodeId a, NodeId b);
    NodeId concat_cols_many(const std::vector<NodeId>& parts);
    NodeId stack_rows(const std::vector<NodeId>& parts); // concat along rows
    NodeId entry(NodeId a, int r, int c); // -> 1x1
    // Gradient reversal: identity forward, upstream gradient times -coeff.
    NodeId grl(NodeId a, double coeff);

    void backward(NodeId root);

    const Mat& value(NodeId id) const { return nodes_[id].val; }
    const Mat& grad(NodeId id) const { return nodes_[id].grad; }
    double scalar(NodeId id) const { return nodes_[id].val.a[0]; }
    bool requires_grad(NodeId id) const { return nodes_[id].needs_grad; }
    int size() const { return static_cast<int>(nodes_.size()); }
    void reserve(int n) { nodes_.reserve(n); }

private:
    struct Node {
        Mat val;
        Mat grad; // allocated lazily in backward()
        bool needs_grad = false;
        std::function<void(Graph&, NodeId)> back; // accumulate into parents
    };

    NodeId push(Mat val, bool needs_grad, std::function<void(Graph&, NodeId)> back);
    Mat& grad_ref(NodeId id) { return nodes_[id].grad; }

    std::vector<Node> nodes_;
};

} // namespace ctaes
