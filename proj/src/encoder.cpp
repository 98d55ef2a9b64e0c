#include "ctaes/encoder.hpp"

#include <algorithm>

#include "ctaes/errors.hpp"
#include "ctaes/rng.hpp"

namespace ctaes::enc {

PromptBank PromptBank::init(int n, int m, int num_topics, int d, std::uint64_t seed, double init_std,
                            bool allow_zero_specific) {
    if (n < 1) throw ConfigError("shared prompt length n must be >= 1");
    if (m < 1 && !(allow_zero_specific && m == 0))
        throw ConfigError("specific prompt length m must be >= 1");
    if (num_topics < 1) throw ConfigError("prompt bank needs at least one topic");
    if (d < 1) throw ConfigError("embedding width must be positive");
    auto gen = seed_stream(seed, "prompt-init");
    PromptBank bank;
    bank.n = n;
    bank.m = m;
    bank.d = d;
    bank.shared = Mat::randn(n, d, init_std, gen);
    bank.specific.reserve(num_topics);
    for (int i = 0; i < num_topics; ++i) bank.specific.push_back(Mat::randn(m, d, init_std, gen));
    return bank;
}

// ---- toy backend ----

ToyBackend::ToyBackend(int d, std::uint64_t seed, int vocab, int max_len)
    : d_(d), vocab_(vocab), max_len_(max_len) {
    if (d < 2) throw ConfigError("toy backend width must be >= 2");
    auto gen = seed_stream(seed, "backend");
    table_ = Mat::randn(vocab_, d_, 1.0, gen);
    // Affine map mixes identity with a random rotation-like component so the
    // pooled output stays well-scaled at any width.
    affine_w_ = Mat::randn(d_, d_, 0.5 / std::sqrt(static_cast<double>(d_)), gen);
    for (int i = 0; i < d_; ++i) affine_w_.at(i, i) += 0.75;
    affine_b_ = Mat::randn(1, d_, 0.1, gen);
    begin_ = Mat::randn(1, d_, 1.0, gen);
    end_ = Mat::randn(1, d_, 1.0, gen);
}

int ToyBackend::token_row(const std::string& token) const {
    return static_cast<int>(fnv1a(token) % static_cast<std::uint64_t>(vocab_));
}

Mat ToyBackend::embed_tokens(const std::vector<std::string>& tokens) const {
    Mat out(static_cast<int>(tokens.size()), d_);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        int row = token_row(tokens[i]);
        for (int j = 0; j < d_; ++j) out.at(static_cast<int>(i), j) = table_.at(row, j);
    }
    return out;
}

Graph::NodeId ToyBackend::forward(Graph& g, Graph::NodeId input_rows) const {
    Graph::NodeId w = g.constant(affine_w_);
    Graph::NodeId b = g.constant(affine_b_);
    Graph::NodeId mapped = g.add_rowvec(g.matmul(input_rows, w), b);
    return g.mean_rows(mapped); // pooled representation broadcast to position 0
}

std::uint64_t ToyBackend::param_hash() const {
    std::uint64_t h = table_.hash();
    h = splitmix64(h ^ affine_w_.hash());
    h = splitmix64(h ^ affine_b_.hash());
    h = splitmix64(h ^ begin_.hash());
    h = splitmix64(h ^ end_.hash());
    return h;
}

std::unique_ptr<EncoderBackend> make_backend(const std::string& name, int d, std::uint64_t seed) {
    if (name == "toy") return std::make_unique<ToyBackend>(d, seed);
    throw ConfigError("backend '" + name + "' is not bundled; available backends: toy");
}

// ---- encoding ----

StagedPrompts stage_prompts(Graph& g, const PromptBank& bank, bool trainable_shared,
                            bool trainable_specific) {
    StagedPrompts staged;
    staged.shared = g.leaf(bank.shared, trainable_shared);
    staged.specific.reserve(bank.specific.size());
    for (const auto& s : bank.specific) staged.specific.push_back(g.leaf(s, trainable_specific));
    return staged;
}

EncodeResult encode(Graph& g, const std::vector<std::string>& tokens, int topic_slot,
                    const StagedPrompts& prompts, const PromptBank& bank, const EncoderBackend& backend,
                    int topic_max_len) {
    if (topic_slot < 0 || topic_slot >= static_cast<int>(prompts.specific.size()))
        throw RegistryError("encode: topic slot " + std::to_string(topic_slot) + " outside prompt bank");
    if (backend.width() != bank.d) throw ContractError("encode: backend width differs from prompt bank");

    int budget = backend.max_length() - bank.n - bank.m - 2;
    if (topic_max_len > 0) budget = std::min(budget, topic_max_len);
    if (budget < 0) throw ConfigError("prompt lengths exceed backend max_length");
    const int kept = std::min<int>(static_cast<int>(tokens.size()), budget);

    std::vector<std::string> kept_tokens(tokens.begin(), tokens.begin() + kept);
    std::vector<Graph::NodeId> parts;
    parts.push_back(g.constant(backend.boundary_begin()));
    parts.push_back(prompts.shared);
    if (bank.m > 0) parts.push_back(prompts.specific[topic_slot]);
    if (kept > 0) parts.push_back(g.constant(backend.embed_tokens(kept_tokens)));
    parts.push_back(g.constant(backend.boundary_end()));

    Graph::NodeId input = g.stack_rows(parts);
    EncodeResult out;
    out.h_cls = backend.forward(g, input);
    out.input_len = g.value(input).rows;
    out.kept_tokens = kept;
    return out;
}

Graph::NodeId project_and_concat(Graph& g, Graph::NodeId h_cls, Graph::NodeId feats_row,
                                 Graph::NodeId proj_w, Graph::NodeId proj_b) {
    const Mat& h = g.value(h_cls);
    const Mat& w = g.value(proj_w);
    if (h.cols != w.rows) throw ContractError("project_and_concat: projection shape mismatch");
    Graph::NodeId projected = g.add_rowvec(g.matmul(h_cls, proj_w), proj_b);
    return g.concat_cols(projected, feats_row);
}

} // namespace ctaes::enc
