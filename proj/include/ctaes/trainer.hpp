#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ctaes/corpus.hpp"
#include "ctaes/metrics.hpp"
#include "ctaes/model.hpp"
#include "ctaes/pseudo.hpp"

namespace ctaes::train {

struct TrainConfig {
    double alpha = 10.0;            // regression weight
    double beta = 1.0;              // adversarial weight
    int epochs = 30;
    int per_topic_batch = 4;
    double learning_rate = 0.01;
    double decay_rate = 0.9;
    int decay_steps = 2000;
    std::uint64_t seed = 42;
    int prompt_len_shared = 8;      // n
    int prompt_len_specific = 8;    // m; 0 disables specific prompts (ablation)
    int knn_k = 8;
    double tau = 2.0;
    double lambda = 0.5;

    std::string backend = "toy";
    int backend_dim = 16;
    int proj_dim = 100;
    int clf_hidden = 10;
    int disc_hidden = 128;
    double grl_coeff = 1.0;
    double clip_norm = 5.0;         // 0 disables clipping
    double prompt_init_std = 0.02;
    bool standardize_feats = true;
    std::string model_selection = "target-qwk"; // or "source-val"
    double val_fraction = 0.1;      // source-val held-out share
    int max_steps = 0;              // iteration cap, 0 = unlimited
    std::string lexicon = "builtin";
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;

    static TrainConfig from_json(const std::string& text, const std::string& origin = "<memory>");
    static TrainConfig from_json_file(const std::string& path);
    std::string to_json() const;
    void validate() const;
    // CTAES_<KEY>=value environment overrides, applied by the CLI.
    void apply_env_overrides();

    double lr_at(long iteration) const; // learning_rate * decay_rate^(iter/decay_steps)
};

enum class Phase { shared, specific };

// l_ce + alpha * l_mse + beta * l_adv; TrainingError naming the offending
// component when one is non-finite.
double total_loss(double l_ce, double l_mse, double l_adv, double alpha, double beta);

struct LossRow {
    long step = 0; // iteration index
    Phase phase = Phase::shared;
    double l_ce = 0, l_mse = 0, l_adv = 0, l_total = 0, lr = 0;
};

struct Batch {
    std::vector<std::vector<int>> source_idx; // per source topic
    std::vector<int> target_idx;
};

struct FitResult {
    double best_metric = 0.0;
    int best_epoch = -1;
    std::vector<double> metric_history;
    long iterations = 0;
};

struct AdamSlot {
    Mat m, v;
    long t = 0;
};

// Two-phase alternating optimization: the shared phase updates
// {shared prompt, classifier, discriminators, trait heads} on
// L_ce + alpha L_mse + beta L_adv; the specific phase updates
// {specific prompts, classifier, trait heads} on L_ce + alpha L_mse.
// The memory bank is refreshed from the shared-phase forward between the
// two. The batch serves both phases.
class Trainer {
public:
    Trainer(corpus::CrossTopicSplit split, corpus::TopicRegistry registry, TrainConfig config);

    static Trainer resume(const std::string& checkpoint_path, corpus::CrossTopicSplit split,
                          corpus::TopicRegistry registry, std::optional<int> epochs_override = {});

    // Directory for train_log.tsv, last.ckpt, best.ckpt; unset = in-memory.
    void set_output_dir(const std::string& dir);

    FitResult fit();

    // Stepwise API for tests and diagnostics.
    Batch draw_batch();
    LossRow shared_step(const Batch& batch);
    LossRow specific_step(const Batch& batch);
    void finish_iteration(); // advances the iteration counter
    void begin_epoch(int epoch);

    model::ModelBundle& bundle() { return bundle_; }
    const model::ModelBundle& bundle() const { return bundle_; }
    const pseudo::MemoryBank& bank() const { return bank_; }
    const std::vector<LossRow>& loss_log() const { return loss_log_; }
    long iteration() const { return iteration_; }
    int epoch() const { return epoch_; }
    int iterations_per_epoch() const;
    const corpus::CrossTopicSplit& split() const { return split_; }
    const TrainConfig& config() const { return config_; }
    const corpus::TopicRegistry& registry() const { return registry_; }
    const std::vector<corpus::EssayRecord>& validation_set() const { return val_records_; }

    void save_checkpoint(const std::string& path, bool model_only = false) const;

    // tab-separated memory-bank diagnostic: essay_id, pseudo class, soft
    // label, top-k neighbor ids.
    void dump_pseudo_labels(const std::string& path) const;

private:
    struct Forwarded;
    void init_features();
    void init_bank();
    double epoch_metric();
    void write_log_row(const LossRow& row);
    LossRow run_phase(const Batch& batch, Phase phase);
    void apply_updates(Graph& g, const model::StagedModel& staged, const std::vector<model::Group>& groups);
    const Mat& feats_of_source(int topic_idx, int essay_idx) const;
    const Mat& feats_of_target(int essay_idx) const;

    corpus::CrossTopicSplit split_;
    corpus::TopicRegistry registry_;
    TrainConfig config_;
    model::ModelBundle bundle_;
    pseudo::MemoryBank bank_;

    std::vector<std::vector<Mat>> source_feats_; // standardized, cached
    std::vector<Mat> target_feats_;
    std::vector<std::vector<int>> train_source_idx_; // sampling pools (val removed)
    std::vector<corpus::EssayRecord> val_records_;

    std::vector<std::vector<int>> epoch_order_; // per topic incl. target (last)
    std::vector<std::size_t> cursor_;

    std::vector<AdamSlot> adam_; // parallel to enumerate_params
    std::vector<LossRow> loss_log_;
    std::vector<double> metric_history_;
    model::ModelParams best_params_;
    double best_metric_ = -2.0;
    int best_epoch_ = -1;

    long iteration_ = 0;
    int epoch_ = 0;
    std::string out_dir_;
    bool log_file_started_ = false;
};

// Model-only load for evaluation; validates registry compatibility.
struct LoadedCheckpoint {
    model::ModelBundle bundle;
    TrainConfig config;
    pseudo::MemoryBank bank;
    int target_topic_id = 0;
    int epoch = 0;
    long iteration = 0;
    bool has_optimizer_state = false;
    double best_metric = 0.0;
    int best_epoch = -1;
};

LoadedCheckpoint load_checkpoint(const std::string& path, const corpus::TopicRegistry& registry);

} // namespace ctaes::train
