#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ctaes/adversary.hpp"
#include "ctaes/classify.hpp"
#include "ctaes/corpus.hpp"
#include "ctaes/encoder.hpp"
#include "ctaes/feats.hpp"
#include "ctaes/graph.hpp"
#include "ctaes/heads.hpp"

namespace ctaes::model {

struct ModelDims {
    int d = 16;          // backend embedding width
    int proj_dim = 100;  // h_cls projection width
    int feat_dim = 86;   // handcrafted feature width
    int K = 9;           // trait scorers
    int clf_hidden = 10;
    int num_classes = 4;
    int disc_hidden = 128;
    int n = 8;           // shared prompt length
    int m = 8;           // specific prompt length
    int num_topics = 0;  // sources + target
    int num_sources() const { return num_topics - 1; }
    int h_width() const { return proj_dim + feat_dim; }
};

// Named parameter groups.
enum class Group { shared_prompt, specific_prompt, classifier, discriminators, trait_heads };

const char* group_name(Group g);

struct ModelParams {
    ModelDims dims;
    enc::PromptBank prompts;           // theta_A (shared) + theta_S (specific)
    Mat proj_w, proj_b;                // with trait heads: theta_T
    heads::TraitHeads trait_heads;
    cls::GradeClassifier classifier;   // theta_C
    adv::DiscriminatorSet discriminators; // theta_G

    static ModelParams init(const ModelDims& dims, std::uint64_t seed, double prompt_init_std = 0.02,
                            bool allow_zero_specific = false);
};

struct ParamRef {
    std::string name;
    Mat* value;
    Group group;
};

// Stable enumeration; naming drives checkpoint tensors and optimizer state.
std::vector<ParamRef> enumerate_params(ModelParams& p);

std::uint64_t group_hash(ModelParams& p, Group g);

struct StagedModel {
    enc::StagedPrompts prompts;
    Graph::NodeId proj_w = -1, proj_b = -1;
    heads::StagedHeads trait_heads;
    cls::StagedClassifier classifier;
    adv::StagedDiscriminators discriminators;
    std::vector<Graph::NodeId> leaf_ids; // parallel to enumerate_params order
};

// Stages every parameter as a leaf; only the listed groups are trainable.
StagedModel stage_model(Graph& g, ModelParams& p, const std::vector<Group>& active_groups);

struct EssayForward {
    Graph::NodeId h_cls = -1;      // 1 x d
    Graph::NodeId h = -1;          // 1 x (proj_dim + feat_dim)
    Graph::NodeId trait_preds = -1; // 1 x K unit scores
    Graph::NodeId clf_probs = -1;  // 1 x num_classes
};

EssayForward forward_essay(Graph& g, const StagedModel& staged, const ModelParams& params,
                           const enc::EncoderBackend& backend, const std::vector<std::string>& tokens,
                           int topic_slot, const Mat& feats_row, int topic_max_len);

// Everything needed to score essays outside the training loop.
struct ModelBundle {
    ModelParams params;
    std::shared_ptr<enc::EncoderBackend> backend;
    feats::Standardizer standardizer;
    feats::Lexicon lexicon;
    std::string backend_name;
    std::uint64_t seed = 0;

    const enc::EncoderBackend& be() const { return *backend; }
};

struct Prediction {
    std::array<double, corpus::kNumTraits> unit_scores{};
    std::vector<double> class_probs;
    Mat h;     // 1 x h_width
    Mat h_cls; // 1 x d
};

Prediction predict_record(const ModelBundle& bundle, const corpus::EssayRecord& rec, int topic_slot,
                          int topic_max_len);

} // namespace ctaes::model
