#include "ctaes/model.hpp"

#include "ctaes/errors.hpp"
#include "ctaes/rng.hpp"

namespace ctaes::model {

const char* group_name(Group g) {
    switch (g) {
    case Group::shared_prompt: return "shared_prompt";
    case Group::specific_prompt: return "specific_prompt";
    case Group::classifier: return "classifier";
    case Group::discriminators: return "discriminators";
    case Group::trait_heads: return "trait_heads";
    }
    return "?";
}

ModelParams ModelParams::init(const ModelDims& dims, std::uint64_t seed, double prompt_init_std,
                              bool allow_zero_specific) {
    if (dims.num_topics < 2) throw ConfigError("model needs at least one source topic and a target");
    ModelParams p;
    p.dims = dims;
    p.prompts = enc::PromptBank::init(dims.n, dims.m, dims.num_topics, dims.d, seed, prompt_init_std,
                                      allow_zero_specific);
    auto gen = seed_stream(seed, "head-init", 0x70726f); // salt: projection
    p.proj_w = Mat::randn(dims.d, dims.proj_dim, 1.0 / std::sqrt(static_cast<double>(dims.d)), gen);
    p.proj_b = Mat(1, dims.proj_dim);
    p.trait_heads = heads::TraitHeads::init(dims.K, dims.h_width(), seed);
    p.classifier = cls::GradeClassifier::init(dims.h_width(), dims.clf_hidden, dims.num_classes, seed);
    p.discriminators = adv::DiscriminatorSet::init(dims.num_sources(), dims.d, dims.disc_hidden, seed);
    return p;
}

std::vector<ParamRef> enumerate_params(ModelParams& p) {
    std::vector<ParamRef> refs;
    refs.push_back({"prompt.shared", &p.prompts.shared, Group::shared_prompt});
    for (std::size_t i = 0; i < p.prompts.specific.size(); ++i)
        refs.push_back({"prompt.specific." + std::to_string(i), &p.prompts.specific[i],
                        Group::specific_prompt});
    refs.push_back({"proj.w", &p.proj_w, Group::trait_heads});
    refs.push_back({"proj.b", &p.proj_b, Group::trait_heads});
    for (int j = 0; j < p.trait_heads.K; ++j) {
        std::string base = "heads." + std::to_string(j) + ".";
        refs.push_back({base + "w_t", &p.trait_heads.w_t[j], Group::trait_heads});
        refs.push_back({base + "b_t", &p.trait_heads.b_t[j], Group::trait_heads});
        refs.push_back({base + "w_y", &p.trait_heads.w_y[j], Group::trait_heads});
        refs.push_back({base + "b_y", &p.trait_heads.b_y[j], Group::trait_heads});
    }
    refs.push_back({"clf.w1", &p.classifier.w1, Group::classifier});
    refs.push_back({"clf.b1", &p.classifier.b1, Group::classifier});
    refs.push_back({"clf.w2", &p.classifier.w2, Group::classifier});
    refs.push_back({"clf.b2", &p.classifier.b2, Group::classifier});
    for (int i = 0; i < p.discriminators.num_sources; ++i) {
        std::string base = "disc." + std::to_string(i) + ".";
        refs.push_back({base + "w1", &p.discriminators.w1[i], Group::discriminators});
        refs.push_back({base + "b1", &p.discriminators.b1[i], Group::discriminators});
        refs.push_back({base + "w2", &p.discriminators.w2[i], Group::discriminators});
        refs.push_back({base + "b2", &p.discriminators.b2[i], Group::discriminators});
    }
    return refs;
}

std::uint64_t group_hash(ModelParams& p, Group g) {
    std::uint64_t h = 1469598103934665603ull;
    for (const auto& ref : enumerate_params(p))
        if (ref.group == g) h = splitmix64(h ^ ref.value->hash());
    return h;
}

StagedModel stage_model(Graph& g, ModelParams& p, const std::vector<Group>& active_groups) {
    auto active = [&active_groups](Group gr) {
        for (Group a : active_groups)
            if (a == gr) return true;
        return false;
    };
    StagedModel s;
    auto refs = enumerate_params(p);
    s.leaf_ids.reserve(refs.size());
    for (const auto& ref : refs) s.leaf_ids.push_back(g.leaf(*ref.value, active(ref.group)));

    // Rebuild per-module views from the flat order above.
    std::size_t idx = 0;
    s.prompts.shared = s.leaf_ids[idx++];
    for (std::size_t i = 0; i < p.prompts.specific.size(); ++i)
        s.prompts.specific.push_back(s.leaf_ids[idx++]);
    s.proj_w = s.leaf_ids[idx++];
    s.proj_b = s.leaf_ids[idx++];
    for (int j = 0; j < p.trait_heads.K; ++j) {
        s.trait_heads.w_t.push_back(s.leaf_ids[idx++]);
        s.trait_heads.b_t.push_back(s.leaf_ids[idx++]);
        s.trait_heads.w_y.push_back(s.leaf_ids[idx++]);
        s.trait_heads.b_y.push_back(s.leaf_ids[idx++]);
    }
    s.classifier.w1 = s.leaf_ids[idx++];
    s.classifier.b1 = s.leaf_ids[idx++];
    s.classifier.w2 = s.leaf_ids[idx++];
    s.classifier.b2 = s.leaf_ids[idx++];
    for (int i = 0; i < p.discriminators.num_sources; ++i) {
        s.discriminators.w1.push_back(s.leaf_ids[idx++]);
        s.discriminators.b1.push_back(s.leaf_ids[idx++]);
        s.discriminators.w2.push_back(s.leaf_ids[idx++]);
        s.discriminators.b2.push_back(s.leaf_ids[idx++]);
    }
    return s;
}

EssayForward forward_essay(Graph& g, const StagedModel& staged, const ModelParams& params,
                           const enc::EncoderBackend& backend, const std::vector<std::string>& tokens,
                           int topic_slot, const Mat& feats_row, int topic_max_len) {
    if (feats_row.cols != params.dims.feat_dim) throw ContractError("forward_essay: feature width mismatch");
    EssayForward out;
    auto encoded = enc::encode(g, tokens, topic_slot, staged.prompts, params.prompts, backend, topic_max_len);
    out.h_cls = encoded.h_cls;
    out.h = enc::project_and_concat(g, out.h_cls, g.constant(feats_row), staged.proj_w, staged.proj_b);
    out.trait_preds = heads::predict_traits(g, out.h, staged.trait_heads);
    out.clf_probs = cls::classify(g, out.h, staged.classifier);
    return out;
}

Prediction predict_record(const ModelBundle& bundle, const corpus::EssayRecord& rec, int topic_slot,
                          int topic_max_len) {
    Graph g;
    // const_cast is safe here: staging with no active groups never writes.
    auto& params = const_cast<ModelParams&>(bundle.params);
    StagedModel staged = stage_model(g, params, {});
    feats::Extractor extractor(bundle.lexicon);
    Mat raw = extractor.extract(rec.tokens);
    Mat std_feats = bundle.standardizer.apply(raw);
    if (std_feats.cols != bundle.params.dims.feat_dim)
        throw ContractError("predict_record: model feature width differs from extractor output");
    EssayForward fwd = forward_essay(g, staged, bundle.params, bundle.be(), rec.tokens, topic_slot,
                                     std_feats, topic_max_len);
    Prediction out;
    const Mat& preds = g.value(fwd.trait_preds);
    for (int j = 0; j < bundle.params.dims.K && j < corpus::kNumTraits; ++j) out.unit_scores[j] = preds.a[j];
    const Mat& probs = g.value(fwd.clf_probs);
    out.class_probs.assign(probs.a.begin(), probs.a.end());
    out.h = g.value(fwd.h);
    out.h_cls = g.value(fwd.h_cls);
    return out;
}

} // namespace ctaes::model
