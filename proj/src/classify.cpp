#include "ctaes/classify.hpp"

#include <cmath>

#include "ctaes/errors.hpp"
#include "ctaes/rng.hpp"

namespace ctaes::cls {

GradeClassifier GradeClassifier::init(int width, int hidden, int num_classes, std::uint64_t seed) {
    if (width < 1 || hidden < 1 || num_classes < 2)
        throw ConfigError("classifier needs width >= 1, hidden >= 1, num_classes >= 2");
    auto gen = seed_stream(seed, "head-init", 0x636c); // salt: classifier
    GradeClassifier p;
    p.width = width;
    p.hidden = hidden;
    p.num_classes = num_classes;
    p.w1 = Mat::randn(width, hidden, 1.0 / std::sqrt(static_cast<double>(width)), gen);
    p.b1 = Mat(1, hidden);
    p.w2 = Mat::randn(hidden, num_classes, 1.0 / std::sqrt(static_cast<double>(hidden)), gen);
    p.b2 = Mat(1, num_classes);
    return p;
}

StagedClassifier stage_classifier(Graph& g, const GradeClassifier& p, bool trainable) {
    StagedClassifier s;
    s.w1 = g.leaf(p.w1, trainable);
    s.b1 = g.leaf(p.b1, trainable);
    s.w2 = g.leaf(p.w2, trainable);
    s.b2 = g.leaf(p.b2, trainable);
    return s;
}

Graph::NodeId classify(Graph& g, Graph::NodeId h, const StagedClassifier& p) {
    Graph::NodeId hid = g.relu(g.add_rowvec(g.matmul(h, p.w1), p.b1));
    Graph::NodeId logits = g.add_rowvec(g.matmul(hid, p.w2), p.b2);
    return g.softmax_rows(logits);
}

Graph::NodeId topic_ce_loss(Graph& g, const std::vector<Graph::NodeId>& prob_rows,
                            const std::vector<int>& labels) {
    if (prob_rows.empty() || prob_rows.size() != labels.size())
        throw ContractError("topic_ce_loss: batch/label size mismatch");
    std::vector<Graph::NodeId> nlls;
    nlls.reserve(prob_rows.size());
    for (std::size_t i = 0; i < prob_rows.size(); ++i) {
        const Mat& probs = g.value(prob_rows[i]);
        if (labels[i] < 0 || labels[i] >= probs.cols)
            throw ContractError("topic_ce_loss: label outside class range");
        Graph::NodeId p = g.entry(prob_rows[i], 0, labels[i]);
        nlls.push_back(g.scale(g.log_clamped(p), -1.0));
    }
    Graph::NodeId total = g.sum(g.concat_cols_many(nlls));
    return g.scale(total, 1.0 / static_cast<double>(nlls.size()));
}

} // namespace ctaes::cls
