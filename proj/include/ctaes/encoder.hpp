#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ctaes/graph.hpp"
#include "ctaes/mat.hpp"

namespace ctaes::enc {

// One topic-shared prompt matrix plus one topic-specific matrix per topic
// (sources and target alike). Entries are the trainable groups
// theta_A (shared) and theta_S (specific).
struct PromptBank {
    Mat shared;                // n x d
    std::vector<Mat> specific; // num_topics matrices, each m x d
    int n = 0;
    int m = 0;
    int d = 0;

    // allow_zero_specific admits m = 0 for the no-specific-prompt ablation;
    // the regular configuration path rejects non-positive lengths.
    static PromptBank init(int n, int m, int num_topics, int d, std::uint64_t seed, double init_std = 0.02,
                           bool allow_zero_specific = false);
};

// Frozen text encoder. embed() maps tokens to fixed vectors; forward() maps
// an assembled input sequence to the output at position 0. Implementations
// must not expose trainable state: prompts are the only inputs that carry
// gradients through forward().
class EncoderBackend {
public:
    virtual ~EncoderBackend() = default;
    virtual std::string name() const = 0;
    virtual int width() const = 0;
    virtual int max_length() const = 0;
    virtual Mat embed_tokens(const std::vector<std::string>& tokens) const = 0; // T x d
    virtual Mat boundary_begin() const = 0; // 1 x d, sequence-start marker
    virtual Mat boundary_end() const = 0;   // 1 x d, sequence-end marker
    virtual Graph::NodeId forward(Graph& g, Graph::NodeId input_rows) const = 0;
    virtual std::uint64_t param_hash() const = 0;
};

// Desk-scale double: fixed random embedding table (hash lookup), position-wise
// affine map, mean-pooling broadcast to position 0. Differentiable with
// respect to prompt inputs, parameters frozen.
class ToyBackend final : public EncoderBackend {
public:
    ToyBackend(int d, std::uint64_t seed, int vocab = 4096, int max_len = 512);

    std::string name() const override { return "toy"; }
    int width() const override { return d_; }
    int max_length() const override { return max_len_; }
    Mat embed_tokens(const std::vector<std::string>& tokens) const override;
    Mat boundary_begin() const override { return begin_; }
    Mat boundary_end() const override { return end_; }
    Graph::NodeId forward(Graph& g, Graph::NodeId input_rows) const override;
    std::uint64_t param_hash() const override;

    // Frozen internals, exposed so tests can recompute the closed form.
    const Mat& table() const { return table_; }
    const Mat& affine_w() const { return affine_w_; }
    const Mat& affine_b() const { return affine_b_; }
    int token_row(const std::string& token) const;

private:
    int d_;
    int vocab_;
    int max_len_;
    Mat table_;    // vocab x d
    Mat affine_w_; // d x d
    Mat affine_b_; // 1 x d
    Mat begin_;    // 1 x d
    Mat end_;      // 1 x d
};

// ConfigError for anything except "toy"; real pretrained backends plug in
// behind the same interface.
std::unique_ptr<EncoderBackend> make_backend(const std::string& name, int d, std::uint64_t seed);

// Prompt bank staged into a graph (leaves marked trainable).
struct StagedPrompts {
    Graph::NodeId shared = -1;
    std::vector<Graph::NodeId> specific;
};

StagedPrompts stage_prompts(Graph& g, const PromptBank& bank, bool trainable_shared = true,
                            bool trainable_specific = true);

struct EncodeResult {
    Graph::NodeId h_cls = -1; // 1 x d
    int input_len = 0;        // positions seen by the backend
    int kept_tokens = 0;      // essay tokens after truncation
};

// Input layout: [begin, shared prompts, topic's specific prompts, token
// embeddings, end]. Truncation drops essay tokens from the tail only;
// prompt positions are never truncated.
EncodeResult encode(Graph& g, const std::vector<std::string>& tokens, int topic_slot,
                    const StagedPrompts& prompts, const PromptBank& bank, const EncoderBackend& backend,
                    int topic_max_len);

// h = [projection(h_cls); feats]; projection is part of theta_T.
Graph::NodeId project_and_concat(Graph& g, Graph::NodeId h_cls, Graph::NodeId feats_row,
                                 Graph::NodeId proj_w, Graph::NodeId proj_b);

} // namespace ctaes::enc
