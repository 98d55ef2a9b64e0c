#pragma once

#include <cstdint>
#include <vector>

#include "ctaes/graph.hpp"
#include "ctaes/mat.hpp"

namespace ctaes::cls {

// Grade classifier over h: MLP (width -> hidden -> num_classes) with softmax
// output. Parameter group theta_C.
struct GradeClassifier {
    int width = 0;
    int hidden = 0;
    int num_classes = 0;
    Mat w1, b1, w2, b2;

    static GradeClassifier init(int width, int hidden, int num_classes, std::uint64_t seed);
};

struct StagedClassifier {
    Graph::NodeId w1 = -1, b1 = -1, w2 = -1, b2 = -1;
};

StagedClassifier stage_classifier(Graph& g, const GradeClassifier& p, bool trainable = true);

// softmax(MLP(h)) -> 1 x num_classes probability row.
Graph::NodeId classify(Graph& g, Graph::NodeId h, const StagedClassifier& p);

// Mean negative log-probability of the true class over one topic's batch.
// Probabilities are clamped at 1e-12 before the log.
Graph::NodeId topic_ce_loss(Graph& g, const std::vector<Graph::NodeId>& prob_rows,
                            const std::vector<int>& labels);

} // namespace ctaes::cls
