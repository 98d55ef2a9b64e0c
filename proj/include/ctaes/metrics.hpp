#pragma once

#include <array>
#include <string>
#include <vector>

#include "ctaes/corpus.hpp"
#include "ctaes/model.hpp"

namespace ctaes::metrics {

// Quadratic weighted kappa over discrete ratings in [min_rating, max_rating].
// Returns 1.0 when both raters are constant and equal (zero-denominator
// convention); 0.0 on the unreachable differing zero-denominator case.
double qwk(const std::vector<int>& pred, const std::vector<int>& gold, int min_rating, int max_rating);

struct TraitCell {
    int trait = -1;
    double qwk = 0.0;
    int count = 0;
};

struct TopicReport {
    int topic_id = 0;
    std::vector<TraitCell> cells; // traits present for the topic
    double avg_qwk = 0.0;         // over present traits
    double classification_accuracy = 0.0;
    double class_qwk = 0.0;       // QWK over grade classes
    int num_essays = 0;

    double trait_qwk(int trait) const; // NaN if absent
};

struct Report {
    std::vector<TopicReport> topics;
    std::array<double, corpus::kNumTraits> trait_avg{}; // over topics possessing the trait
    std::array<int, corpus::kNumTraits> trait_topic_count{};
    double grand_avg = 0.0;          // mean of per-topic averages
    double grand_trait_avg = 0.0;    // mean of per-trait averages over occupied traits

    void finalize(); // recompute aggregates from topic rows
    std::string to_text() const;
    std::string to_tsv() const;
};

// Sole reader of sealed gold labels.
class Evaluator {
public:
    // Scores every target essay, denormalizes trait predictions to integer
    // raw scores, computes per-trait QWK plus grade-classification metrics.
    static TopicReport evaluate(const model::ModelBundle& bundle, const corpus::CrossTopicSplit& split,
                                const corpus::TopicRegistry& registry);

    // Mean QWK over present traits; the per-epoch model-selection metric.
    static double average_target_qwk(const model::ModelBundle& bundle,
                                     const corpus::CrossTopicSplit& split,
                                     const corpus::TopicRegistry& registry);

    // Source-validation variant: scores labeled held-out source essays
    // (no sealed data involved).
    static double average_source_qwk(const model::ModelBundle& bundle,
                                     const std::vector<corpus::EssayRecord>& held_out,
                                     const corpus::TopicRegistry& registry);
};

// essay_id, topic_id, is_target, then the h feature columns, one essay per
// row, for external projection tools.
void dump_embeddings(const model::ModelBundle& bundle, const corpus::CrossTopicSplit& split,
                     const corpus::TopicRegistry& registry, const std::string& out_path);

} // namespace ctaes::metrics
