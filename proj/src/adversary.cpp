#include "ctaes/adversary.hpp"

#include <cmath>

#include "ctaes/errors.hpp"
#include "ctaes/rng.hpp"

namespace ctaes::adv {

DiscriminatorSet DiscriminatorSet::init(int num_sources, int width, int hidden, std::uint64_t seed) {
    if (num_sources < 1) throw ConfigError("discriminator set needs at least one source topic");
    if (width < 1 || hidden < 1) throw ConfigError("discriminator needs positive width and hidden size");
    auto gen = seed_stream(seed, "head-init", 0x6469); // salt: discriminators
    DiscriminatorSet p;
    p.num_sources = num_sources;
    p.width = width;
    p.hidden = hidden;
    for (int i = 0; i < num_sources; ++i) {
        p.w1.push_back(Mat::randn(width, hidden, 1.0 / std::sqrt(static_cast<double>(width)), gen));
        p.b1.push_back(Mat(1, hidden));
        p.w2.push_back(Mat::randn(hidden, 2, 1.0 / std::sqrt(static_cast<double>(hidden)), gen));
        p.b2.push_back(Mat(1, 2));
    }
    return p;
}

StagedDiscriminators stage_discriminators(Graph& g, const DiscriminatorSet& p, bool trainable) {
    StagedDiscriminators s;
    for (int i = 0; i < p.num_sources; ++i) {
        s.w1.push_back(g.leaf(p.w1[i], trainable));
        s.b1.push_back(g.leaf(p.b1[i], trainable));
        s.w2.push_back(g.leaf(p.w2[i], trainable));
        s.b2.push_back(g.leaf(p.b2[i], trainable));
    }
    return s;
}

Graph::NodeId discriminate(Graph& g, Graph::NodeId h_cls, const StagedDiscriminators& p, int i,
                           double grl_coeff, bool use_grl) {
    if (i < 0 || i >= static_cast<int>(p.w1.size())) throw ContractError("discriminate: bad source index");
    Graph::NodeId x = use_grl ? g.grl(h_cls, grl_coeff) : h_cls;
    Graph::NodeId hid = g.relu(g.add_rowvec(g.matmul(x, p.w1[i]), p.b1[i]));
    Graph::NodeId probs = g.softmax_rows(g.add_rowvec(g.matmul(hid, p.w2[i]), p.b2[i]));
    return g.entry(probs, 0, 1); // class 1 = target topic
}

Graph::NodeId adversarial_loss(Graph& g, const std::vector<std::vector<Graph::NodeId>>& source_h_cls,
                               const std::vector<Graph::NodeId>& target_h_cls,
                               const StagedDiscriminators& p, double grl_coeff, bool use_grl) {
    if (target_h_cls.empty()) throw ContractError("adversarial_loss: empty target batch");
    if (source_h_cls.size() != p.w1.size())
        throw ContractError("adversarial_loss: one source batch per discriminator required");

    std::vector<Graph::NodeId> terms;
    for (std::size_t i = 0; i < source_h_cls.size(); ++i) {
        for (Graph::NodeId h : source_h_cls[i]) {
            Graph::NodeId pt = discriminate(g, h, p, static_cast<int>(i), grl_coeff, use_grl);
            terms.push_back(g.log_clamped(g.one_minus(pt)));
        }
        for (Graph::NodeId h : target_h_cls) {
            Graph::NodeId pt = discriminate(g, h, p, static_cast<int>(i), grl_coeff, use_grl);
            terms.push_back(g.log_clamped(pt));
        }
    }
    return g.scale(g.sum(g.concat_cols_many(terms)), -1.0);
}

} // namespace ctaes::adv
