#pragma once

#include <cstdint>
#include <vector>

#include "ctaes/graph.hpp"
#include "ctaes/mat.hpp"

namespace ctaes::heads {

// K per-trait scorers over the joint representation h: a nonlinear transform
// per trait, scaled-dot-product attention across the other traits' features,
// then a sigmoid output head on [own; attended]. Parameter group theta_T
// (together with the h_cls projection).
struct TraitHeads {
    int K = 0;
    int width = 0;               // h width (186 in the full configuration)
    std::vector<Mat> w_t;        // K of width x width
    std::vector<Mat> b_t;        // K of 1 x width
    std::vector<Mat> w_y;        // K of 2*width x 1
    std::vector<Mat> b_y;        // K of 1 x 1

    static TraitHeads init(int K, int width, std::uint64_t seed);
};

struct StagedHeads {
    std::vector<Graph::NodeId> w_t, b_t, w_y, b_y;
};

StagedHeads stage_heads(Graph& g, const TraitHeads& p, bool trainable = true);

// h'_j = relu(w_j h + b_j)
Graph::NodeId trait_transform(Graph& g, Graph::NodeId h, const StagedHeads& p, int j);

struct AttentionResult {
    Graph::NodeId weights; // 1 x (K-1), softmax over the other traits
    Graph::NodeId attended; // o_j, 1 x width
    Graph::NodeId combined; // n_j = [h'_j ; o_j], 1 x 2*width
};

// Scaled dot-product attention of trait j over the other traits' transformed
// features; score(a, b) = a.b / sqrt(width), single head.
AttentionResult trait_attention(Graph& g, const std::vector<Graph::NodeId>& transformed, int j);

// sigmoid(w_y . n_j + b_y), strictly inside (0, 1).
Graph::NodeId predict_trait_score(Graph& g, Graph::NodeId n_j, const StagedHeads& p, int j);

// All K trait predictions for one essay: returns 1 x K row of unit scores.
Graph::NodeId predict_traits(Graph& g, Graph::NodeId h, const StagedHeads& p);

// Mean of (pred - gold)^2 over unmasked cells only. Masked-cell values are
// irrelevant; an all-masked batch is an invalid composition.
Graph::NodeId masked_mse(Graph& g, Graph::NodeId preds, const Mat& gold, const Mat& mask);

} // namespace ctaes::heads
