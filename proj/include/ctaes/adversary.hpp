#pragma once

#include <cstdint>
#include <vector>

#include "ctaes/graph.hpp"
#include "ctaes/mat.hpp"

namespace ctaes::adv {

// One binary discriminator per (source topic, target) pair: MLP
// d -> hidden -> 2 logits over the raw h_cls, behind a gradient reversal
// layer. Parameter group theta_G.
struct DiscriminatorSet {
    int num_sources = 0;
    int width = 0;
    int hidden = 0;
    std::vector<Mat> w1, b1, w2, b2;

    static DiscriminatorSet init(int num_sources, int width, int hidden, std::uint64_t seed);
};

struct StagedDiscriminators {
    std::vector<Graph::NodeId> w1, b1, w2, b2;
};

StagedDiscriminators stage_discriminators(Graph& g, const DiscriminatorSet& p, bool trainable = true);

// Probability that h_cls belongs to the target topic, under discriminator i.
// The input is routed through the GRL first (coeff 0 detaches it entirely);
// set use_grl = false to obtain the plain, non-reversed gradient path.
Graph::NodeId discriminate(Graph& g, Graph::NodeId h_cls, const StagedDiscriminators& p, int i,
                           double grl_coeff = 1.0, bool use_grl = true);

// L_adv = -sum_i [ sum_{x in S_i} log(1 - p_i(x)) + sum_{x' in T} log p_i(x') ].
// Sums, not means; every discriminator scores the whole target batch.
Graph::NodeId adversarial_loss(Graph& g, const std::vector<std::vector<Graph::NodeId>>& source_h_cls,
                               const std::vector<Graph::NodeId>& target_h_cls,
                               const StagedDiscriminators& p, double grl_coeff = 1.0,
                               bool use_grl = true);

} // namespace ctaes::adv
