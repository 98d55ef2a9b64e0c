#include "ctaes/heads.hpp"

#include <cmath>

#include "ctaes/errors.hpp"
#include "ctaes/rng.hpp"

namespace ctaes::heads {

TraitHeads TraitHeads::init(int K, int width, std::uint64_t seed) {
    if (K < 1) throw ConfigError("trait heads need K >= 1");
    if (width < 1) throw ConfigError("trait head width must be positive");
    auto gen = seed_stream(seed, "head-init", 0x7261); // salt: trait heads
    TraitHeads p;
    p.K = K;
    p.width = width;
    double t_std = 1.0 / std::sqrt(static_cast<double>(width));
    double y_std = 1.0 / std::sqrt(2.0 * width);
    for (int j = 0; j < K; ++j) {
        p.w_t.push_back(Mat::randn(width, width, t_std, gen));
        p.b_t.push_back(Mat(1, width));
        p.w_y.push_back(Mat::randn(2 * width, 1, y_std, gen));
        p.b_y.push_back(Mat(1, 1));
    }
    return p;
}

StagedHeads stage_heads(Graph& g, const TraitHeads& p, bool trainable) {
    StagedHeads s;
    for (int j = 0; j < p.K; ++j) {
        s.w_t.push_back(g.leaf(p.w_t[j], trainable));
        s.b_t.push_back(g.leaf(p.b_t[j], trainable));
        s.w_y.push_back(g.leaf(p.w_y[j], trainable));
        s.b_y.push_back(g.leaf(p.b_y[j], trainable));
    }
    return s;
}

Graph::NodeId trait_transform(Graph& g, Graph::NodeId h, const StagedHeads& p, int j) {
    if (j < 0 || j >= static_cast<int>(p.w_t.size())) throw ContractError("trait_transform: bad trait index");
    return g.relu(g.add_rowvec(g.matmul(h, p.w_t[j]), p.b_t[j]));
}

AttentionResult trait_attention(Graph& g, const std::vector<Graph::NodeId>& transformed, int j) {
    const int K = static_cast<int>(transformed.size());
    if (K < 2) throw ConfigError("trait attention undefined for K < 2");
    if (j < 0 || j >= K) throw ContractError("trait_attention: bad trait index");
    const int width = g.value(transformed[j]).cols;

    std::vector<Graph::NodeId> others;
    others.reserve(K - 1);
    for (int i = 0; i < K; ++i)
        if (i != j) others.push_back(transformed[i]);

    Graph::NodeId f_others = g.stack_rows(others);                       // (K-1) x width
    Graph::NodeId scores = g.matmul(transformed[j], g.transpose(f_others)); // 1 x (K-1)
    scores = g.scale(scores, 1.0 / std::sqrt(static_cast<double>(width)));

    AttentionResult r;
    r.weights = g.softmax_rows(scores);
    r.attended = g.matmul(r.weights, f_others); // 1 x width
    r.combined = g.concat_cols(transformed[j], r.attended);
    return r;
}

Graph::NodeId predict_trait_score(Graph& g, Graph::NodeId n_j, const StagedHeads& p, int j) {
    if (j < 0 || j >= static_cast<int>(p.w_y.size())) throw ContractError("predict_trait_score: bad trait index");
    return g.sigmoid(g.add(g.matmul(n_j, p.w_y[j]), p.b_y[j]));
}

Graph::NodeId predict_traits(Graph& g, Graph::NodeId h, const StagedHeads& p) {
    const int K = static_cast<int>(p.w_t.size());
    std::vector<Graph::NodeId> transformed;
    transformed.reserve(K);
    for (int j = 0; j < K; ++j) transformed.push_back(trait_transform(g, h, p, j));
    std::vector<Graph::NodeId> scores;
    scores.reserve(K);
    for (int j = 0; j < K; ++j) {
        auto att = trait_attention(g, transformed, j);
        scores.push_back(predict_trait_score(g, att.combined, p, j));
    }
    return g.concat_cols_many(scores); // 1 x K
}

Graph::NodeId masked_mse(Graph& g, Graph::NodeId preds, const Mat& gold, const Mat& mask) {
    const Mat& p = g.value(preds);
    if (!p.same_shape(gold) || !p.same_shape(mask)) throw ContractError("masked_mse: shape mismatch");
    double count = 0;
    for (double x : mask.a) count += x;
    if (count <= 0.0) throw ContractError("masked_mse: batch has no unmasked trait entries");
    Graph::NodeId diff = g.sub(preds, g.constant(gold));
    Graph::NodeId sq = g.mul(diff, diff);
    Graph::NodeId masked = g.mul(sq, g.constant(mask));
    return g.scale(g.sum(masked), 1.0 / count);
}

} // namespace ctaes::heads
