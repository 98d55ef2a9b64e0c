#include "ctaes/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>

#include <json.hpp>

#include "ctaes/adversary.hpp"
#include "ctaes/checkpoint.hpp"
#include "ctaes/classify.hpp"
#include "ctaes/rng.hpp"

namespace ctaes::train {

using nlohmann::json;

namespace {

constexpr const char* kCkptSchema = "ctaes-ckpt-1";

const std::vector<model::Group> kSharedGroups = {model::Group::shared_prompt, model::Group::classifier,
                                                 model::Group::discriminators, model::Group::trait_heads};
const std::vector<model::Group> kSpecificGroups = {model::Group::specific_prompt, model::Group::classifier,
                                                   model::Group::trait_heads};

void check_finite(double v, const char* component, long iteration) {
    if (!std::isfinite(v))
        throw TrainingError(std::string("non-finite ") + component + " at iteration " +
                            std::to_string(iteration));
}

const char* phase_name(Phase p) { return p == Phase::shared ? "shared" : "specific"; }

} // namespace

double total_loss(double l_ce, double l_mse, double l_adv, double alpha, double beta) {
    if (!std::isfinite(l_ce)) throw TrainingError("non-finite L_ce");
    if (!std::isfinite(l_mse)) throw TrainingError("non-finite L_mse");
    if (!std::isfinite(l_adv)) throw TrainingError("non-finite L_adv");
    return l_ce + alpha * l_mse + beta * l_adv;
}

Trainer::Trainer(corpus::CrossTopicSplit split, corpus::TopicRegistry registry, TrainConfig config)
    : split_(std::move(split)), registry_(std::move(registry)), config_(std::move(config)) {
    config_.validate();
    if (split_.target.empty()) throw ConfigError("trainer: empty target collection");
    if (split_.sources.empty()) throw ConfigError("trainer: no source topics");
    if (config_.knn_k > static_cast<int>(split_.target.size()) - 1)
        throw ConfigError("knn_k=" + std::to_string(config_.knn_k) + " needs at least " +
                          std::to_string(config_.knn_k + 1) + " target essays");

    model::ModelDims dims;
    dims.d = config_.backend_dim;
    dims.proj_dim = config_.proj_dim;
    dims.feat_dim = feats::kFeatureDim;
    dims.K = corpus::kNumTraits;
    dims.clf_hidden = config_.clf_hidden;
    dims.num_classes = corpus::kNumGrades;
    dims.disc_hidden = config_.disc_hidden;
    dims.n = config_.prompt_len_shared;
    dims.m = config_.prompt_len_specific;
    dims.num_topics = registry_.num_topics();
    if (dims.num_topics != split_.num_sources() + 1)
        throw ConfigError("registry lists " + std::to_string(dims.num_topics) + " topics but the split has " +
                          std::to_string(split_.num_sources() + 1) +
                          "; prompt slots require the full topic set in the data");

    // One discriminator per (source, target) pair; shapes must match the split.
    bundle_.params = model::ModelParams::init(dims, config_.seed, config_.prompt_init_std,
                                              /*allow_zero_specific=*/config_.prompt_len_specific == 0);
    bundle_.backend = enc::make_backend(config_.backend, dims.d, config_.seed);
    bundle_.backend_name = config_.backend;
    bundle_.seed = config_.seed;
    bundle_.lexicon =
        config_.lexicon == "builtin" ? feats::Lexicon::builtin() : feats::Lexicon::load(config_.lexicon);

    init_features();
    init_bank();

    adam_.resize(model::enumerate_params(bundle_.params).size());
    best_params_ = bundle_.params;
    begin_epoch(0);
}

void Trainer::init_features() {
    feats::Extractor extractor(bundle_.lexicon);
    std::vector<Mat> raw_source;
    std::vector<std::vector<Mat>> raw_by_topic(split_.sources.size());
    for (std::size_t i = 0; i < split_.sources.size(); ++i) {
        for (const auto& rec : split_.sources[i]) {
            raw_by_topic[i].push_back(extractor.extract(rec.tokens));
            raw_source.push_back(raw_by_topic[i].back());
        }
    }
    bundle_.standardizer = config_.standardize_feats ? feats::Standardizer::fit(raw_source)
                                                     : feats::Standardizer::disabled();
    source_feats_.resize(split_.sources.size());
    for (std::size_t i = 0; i < split_.sources.size(); ++i)
        for (const auto& raw : raw_by_topic[i]) source_feats_[i].push_back(bundle_.standardizer.apply(raw));
    for (const auto& rec : split_.target)
        target_feats_.push_back(bundle_.standardizer.apply(extractor.extract(rec.tokens)));

    // Sampling pools; source-val mode holds out a seeded fraction per topic.
    train_source_idx_.resize(split_.sources.size());
    val_records_.clear();
    for (std::size_t i = 0; i < split_.sources.size(); ++i) {
        std::vector<int> idx(split_.sources[i].size());
        std::iota(idx.begin(), idx.end(), 0);
        if (config_.model_selection == "source-val") {
            auto gen = seed_stream(config_.seed, "val-split", static_cast<std::uint64_t>(i));
            std::shuffle(idx.begin(), idx.end(), gen);
            int held = std::max(1, static_cast<int>(std::floor(idx.size() * config_.val_fraction)));
            held = std::min<int>(held, static_cast<int>(idx.size()) - 1);
            for (int v = 0; v < held; ++v) val_records_.push_back(split_.sources[i][idx[v]]);
            idx.erase(idx.begin(), idx.begin() + held);
            std::sort(idx.begin(), idx.end());
        }
        train_source_idx_[i] = std::move(idx);
    }
}

void Trainer::init_bank() {
    int target_slot = registry_.slot_of(split_.target_topic_id);
    int max_len = registry_.by_id(split_.target_topic_id).max_len;
    std::vector<std::string> ids;
    std::vector<Mat> features, probs;
    for (const auto& rec : split_.target) {
        auto pred = model::predict_record(bundle_, rec, target_slot, max_len);
        ids.push_back(rec.essay_id);
        features.push_back(pred.h);
        probs.push_back(Mat::row(pred.class_probs));
    }
    bank_ = pseudo::MemoryBank::init(ids, features, probs, config_.lambda, config_.tau);
}

void Trainer::set_output_dir(const std::string& dir) {
    out_dir_ = dir;
    if (!out_dir_.empty()) std::filesystem::create_directories(out_dir_);
}

void Trainer::begin_epoch(int epoch) {
    const std::size_t pools = split_.sources.size() + 1;
    epoch_order_.assign(pools, {});
    cursor_.assign(pools, 0);
    for (std::size_t i = 0; i < split_.sources.size(); ++i) {
        epoch_order_[i] = train_source_idx_[i];
        auto gen = seed_stream(config_.seed, "data-shuffle",
                               static_cast<std::uint64_t>(epoch) * 1009 + i);
        std::shuffle(epoch_order_[i].begin(), epoch_order_[i].end(), gen);
    }
    auto& target_order = epoch_order_.back();
    target_order.resize(split_.target.size());
    std::iota(target_order.begin(), target_order.end(), 0);
    auto gen = seed_stream(config_.seed, "data-shuffle",
                           static_cast<std::uint64_t>(epoch) * 1009 + split_.sources.size());
    std::shuffle(target_order.begin(), target_order.end(), gen);
}

int Trainer::iterations_per_epoch() const {
    std::size_t largest = split_.target.size();
    for (const auto& pool : train_source_idx_) largest = std::max(largest, pool.size());
    return static_cast<int>((largest + config_.per_topic_batch - 1) / config_.per_topic_batch);
}

Batch Trainer::draw_batch() {
    Batch b;
    b.source_idx.resize(split_.sources.size());
    for (std::size_t i = 0; i < split_.sources.size(); ++i) {
        const auto& order = epoch_order_[i];
        if (order.empty()) throw ConfigError("source topic with no training essays");
        for (int k = 0; k < config_.per_topic_batch; ++k)
            b.source_idx[i].push_back(order[cursor_[i]++ % order.size()]);
    }
    const auto& torder = epoch_order_.back();
    for (int k = 0; k < config_.per_topic_batch; ++k)
        b.target_idx.push_back(torder[cursor_.back()++ % torder.size()]);
    return b;
}

const Mat& Trainer::feats_of_source(int topic_idx, int essay_idx) const {
    return source_feats_[topic_idx][essay_idx];
}

const Mat& Trainer::feats_of_target(int essay_idx) const { return target_feats_[essay_idx]; }

LossRow Trainer::run_phase(const Batch& batch, Phase phase) {
    Graph g;
    g.reserve(4096);
    const auto& groups = phase == Phase::shared ? kSharedGroups : kSpecificGroups;
    model::StagedModel staged = model::stage_model(g, bundle_.params, groups);
    const int target_slot = registry_.slot_of(split_.target_topic_id);
    const int target_max_len = registry_.by_id(split_.target_topic_id).max_len;

    // Source topics: classification CE (per-topic mean) and masked regression
    // MSE (per-topic mean over unmasked cells), each summed across topics.
    std::vector<std::vector<Graph::NodeId>> source_h_cls(split_.sources.size());
    Graph::NodeId l_sce = -1, l_mse = -1;
    for (std::size_t i = 0; i < split_.sources.size(); ++i) {
        const auto& spec = registry_.by_id(split_.source_topic_ids[i]);
        const int slot = registry_.slot_of(spec.topic_id);
        std::vector<Graph::NodeId> probs, pred_rows;
        std::vector<int> labels;
        const int B = static_cast<int>(batch.source_idx[i].size());
        Mat gold(B, bundle_.params.dims.K), mask(B, bundle_.params.dims.K);
        for (int bi = 0; bi < B; ++bi) {
            const auto& rec = split_.sources[i][batch.source_idx[i][bi]];
            auto fwd = model::forward_essay(g, staged, bundle_.params, bundle_.be(), rec.tokens, slot,
                                            feats_of_source(static_cast<int>(i), batch.source_idx[i][bi]),
                                            spec.max_len);
            source_h_cls[i].push_back(fwd.h_cls);
            probs.push_back(fwd.clf_probs);
            pred_rows.push_back(fwd.trait_preds);
            labels.push_back(rec.grade_class);
            for (int j = 0; j < bundle_.params.dims.K; ++j) {
                if (!rec.trait_mask[j]) continue;
                gold.at(bi, j) = rec.unit_scores[j];
                mask.at(bi, j) = 1.0;
            }
        }
        Graph::NodeId topic_ce = cls::topic_ce_loss(g, probs, labels);
        Graph::NodeId topic_mse = heads::masked_mse(g, g.stack_rows(pred_rows), gold, mask);
        l_sce = l_sce < 0 ? topic_ce : g.add(l_sce, topic_ce);
        l_mse = l_mse < 0 ? topic_mse : g.add(l_mse, topic_mse);
    }

    // Target topic: pseudo-label CE normalized by the full target count.
    // Labels come fresh from the current bank and the current forward values.
    std::vector<Graph::NodeId> target_h_cls, target_probs;
    std::vector<int> pseudo_labels;
    struct BankUpdate {
        std::string essay_id;
        Mat h, probs;
    };
    std::vector<BankUpdate> bank_updates;
    for (int idx : batch.target_idx) {
        const auto& rec = split_.target[idx];
        auto fwd = model::forward_essay(g, staged, bundle_.params, bundle_.be(), rec.tokens, target_slot,
                                        feats_of_target(idx), target_max_len);
        target_h_cls.push_back(fwd.h_cls);
        target_probs.push_back(fwd.clf_probs);
        auto pl = bank_.knn_pseudo_label(g.value(fwd.h), rec.essay_id, config_.knn_k);
        pseudo_labels.push_back(pl.grade);
        if (phase == Phase::shared)
            bank_updates.push_back({rec.essay_id, g.value(fwd.h), g.value(fwd.clf_probs)});
    }
    Graph::NodeId l_tce =
        pseudo::target_ce_loss(g, target_probs, pseudo_labels, static_cast<int>(split_.target.size()));
    Graph::NodeId l_ce = g.add(l_sce, l_tce);

    LossRow row;
    row.step = iteration_;
    row.phase = phase;
    row.lr = config_.lr_at(iteration_);
    row.l_ce = g.scalar(l_ce);
    row.l_mse = g.scalar(l_mse);

    Graph::NodeId l_total = g.add(l_ce, g.scale(l_mse, config_.alpha));
    if (phase == Phase::shared) {
        Graph::NodeId l_adv = adv::adversarial_loss(g, source_h_cls, target_h_cls, staged.discriminators,
                                                    config_.grl_coeff, /*use_grl=*/true);
        row.l_adv = g.scalar(l_adv);
        l_total = g.add(l_total, g.scale(l_adv, config_.beta));
    }
    row.l_total = g.scalar(l_total);
    check_finite(row.l_ce, "L_ce", iteration_);
    check_finite(row.l_mse, "L_mse", iteration_);
    check_finite(row.l_adv, "L_adv", iteration_);
    check_finite(row.l_total, "L_total", iteration_);

    g.backward(l_total);
    apply_updates(g, staged, groups);

    for (const auto& u : bank_updates) bank_.update(u.essay_id, u.h, u.probs);

    write_log_row(row);
    return row;
}

LossRow Trainer::shared_step(const Batch& batch) { return run_phase(batch, Phase::shared); }

LossRow Trainer::specific_step(const Batch& batch) { return run_phase(batch, Phase::specific); }

void Trainer::finish_iteration() { ++iteration_; }

void Trainer::apply_updates(Graph& g, const model::StagedModel& staged,
                            const std::vector<model::Group>& groups) {
    auto refs = model::enumerate_params(bundle_.params);
    auto active = [&groups](model::Group gr) {
        return std::find(groups.begin(), groups.end(), gr) != groups.end();
    };

    double sq_norm = 0.0;
    std::vector<std::size_t> live;
    for (std::size_t i = 0; i < refs.size(); ++i) {
        if (!active(refs[i].group)) continue;
        const Mat& grad = g.grad(staged.leaf_ids[i]);
        sq_norm += dot(grad, grad);
        live.push_back(i);
    }
    double scale = 1.0;
    if (config_.clip_norm > 0.0) {
        double norm = std::sqrt(sq_norm);
        if (norm > config_.clip_norm) scale = config_.clip_norm / norm;
    }

    const double lr = config_.lr_at(iteration_);
    const double b1 = config_.adam_beta1, b2 = config_.adam_beta2, eps = config_.adam_eps;
    for (std::size_t i : live) {
        AdamSlot& slot = adam_[i];
        Mat& x = *refs[i].value;
        const Mat& grad = g.grad(staged.leaf_ids[i]);
        if (slot.m.size() == 0) {
            slot.m = Mat(x.rows, x.cols);
            slot.v = Mat(x.rows, x.cols);
        }
        slot.t += 1;
        const double corr1 = 1.0 - std::pow(b1, static_cast<double>(slot.t));
        const double corr2 = 1.0 - std::pow(b2, static_cast<double>(slot.t));
        for (int e = 0; e < x.size(); ++e) {
            double gi = grad.a[e] * scale;
            slot.m.a[e] = b1 * slot.m.a[e] + (1.0 - b1) * gi;
            slot.v.a[e] = b2 * slot.v.a[e] + (1.0 - b2) * gi * gi;
            double mhat = slot.m.a[e] / corr1;
            double vhat = slot.v.a[e] / corr2;
            x.a[e] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

void Trainer::write_log_row(const LossRow& row) {
    loss_log_.push_back(row);
    if (out_dir_.empty()) return;
    std::string path = out_dir_ + "/train_log.tsv";
    std::ofstream out(path, log_file_started_ ? std::ios::app : std::ios::trunc);
    if (!out) throw FileError("cannot write " + path);
    if (!log_file_started_) {
        out << "step\tphase\tl_ce\tl_mse\tl_adv\tl_total\tlr\n";
        log_file_started_ = true;
    }
    char buf[192];
    std::snprintf(buf, sizeof buf, "%ld\t%s\t%.17g\t%.17g\t%.17g\t%.17g\t%.17g\n", row.step,
                  phase_name(row.phase), row.l_ce, row.l_mse, row.l_adv, row.l_total, row.lr);
    out << buf;
}

double Trainer::epoch_metric() {
    if (config_.model_selection == "source-val")
        return metrics::Evaluator::average_source_qwk(bundle_, val_records_, registry_);
    return metrics::Evaluator::average_target_qwk(bundle_, split_, registry_);
}

FitResult Trainer::fit() {
    if (config_.epochs == 0 && epoch_ == 0) {
        std::cerr << "warning: epochs=0, returning initial state unchanged\n";
    }
    while (epoch_ < config_.epochs) {
        if (config_.max_steps > 0 && iteration_ >= config_.max_steps) break;
        begin_epoch(epoch_);
        const int iters = iterations_per_epoch();
        for (int it = 0; it < iters; ++it) {
            if (config_.max_steps > 0 && iteration_ >= config_.max_steps) break;
            Batch batch = draw_batch();
            shared_step(batch);
            specific_step(batch);
            finish_iteration();
        }
        double metric = epoch_metric();
        metric_history_.push_back(metric);
        if (metric > best_metric_) {
            best_metric_ = metric;
            best_epoch_ = epoch_;
            best_params_ = bundle_.params;
        }
        ++epoch_;
        if (!out_dir_.empty()) save_checkpoint(out_dir_ + "/last.ckpt");
    }
    if (best_epoch_ < 0) best_params_ = bundle_.params;
    if (!out_dir_.empty()) {
        save_checkpoint(out_dir_ + "/last.ckpt");
        save_checkpoint(out_dir_ + "/best.ckpt", /*model_only=*/true);
    }
    FitResult res;
    res.best_metric = best_metric_;
    res.best_epoch = best_epoch_;
    res.metric_history = metric_history_;
    res.iterations = iteration_;
    return res;
}

// ---- checkpointing ----

void Trainer::save_checkpoint(const std::string& path, bool model_only) const {
    CheckpointData data;
    json meta;
    meta["schema_version"] = kCkptSchema;
    meta["model_only"] = model_only;
    meta["config"] = json::parse(config_.to_json());
    meta["backend_name"] = bundle_.backend_name;
    meta["backend_hash"] = std::to_string(bundle_.be().param_hash());
    meta["registry_digest"] = std::to_string(fnv1a(registry_.to_json()));
    meta["target_topic_id"] = split_.target_topic_id;
    meta["source_topic_ids"] = split_.source_topic_ids;
    meta["iteration"] = iteration_;
    meta["epoch"] = epoch_;
    meta["metric_history"] = metric_history_;
    meta["best_metric"] = best_metric_;
    meta["best_epoch"] = best_epoch_;
    meta["lexicon_text"] = bundle_.lexicon.to_text();
    meta["feats_standardized"] = bundle_.standardizer.enabled;
    json bank_meta;
    bank_meta["lambda"] = bank_.lambda();
    bank_meta["tau"] = bank_.tau();
    json ids = json::array();
    for (const auto& e : bank_.entries()) ids.push_back(e.essay_id);
    bank_meta["ids"] = ids;
    meta["bank"] = bank_meta;

    auto& params = const_cast<model::ModelParams&>(model_only ? best_params_ : bundle_.params);
    auto refs = model::enumerate_params(params);
    for (const auto& r : refs) data.tensors.emplace_back("param." + r.name, *r.value);
    data.tensors.emplace_back("feats.mean", bundle_.standardizer.mean);
    data.tensors.emplace_back("feats.std", bundle_.standardizer.std);

    const int width = bundle_.params.dims.h_width();
    Mat bank_features(bank_.size(), width);
    Mat bank_soft(bank_.size(), corpus::kNumGrades);
    for (int i = 0; i < bank_.size(); ++i) {
        const auto& e = bank_.entries()[i];
        for (int j = 0; j < width; ++j) bank_features.at(i, j) = e.feature.a[j];
        for (int j = 0; j < corpus::kNumGrades; ++j) bank_soft.at(i, j) = e.soft.a[j];
    }
    data.tensors.emplace_back("bank.features", std::move(bank_features));
    data.tensors.emplace_back("bank.soft", std::move(bank_soft));

    if (!model_only) {
        auto& current = const_cast<model::ModelParams&>(bundle_.params);
        auto cur_refs = model::enumerate_params(current);
        json adam_t = json::object();
        for (std::size_t i = 0; i < cur_refs.size(); ++i) {
            const AdamSlot& slot = adam_[i];
            adam_t[cur_refs[i].name] = slot.t;
            if (slot.m.size() > 0) {
                data.tensors.emplace_back("adam.m." + cur_refs[i].name, slot.m);
                data.tensors.emplace_back("adam.v." + cur_refs[i].name, slot.v);
            }
        }
        meta["adam_t"] = adam_t;
        auto& best = const_cast<model::ModelParams&>(best_params_);
        for (const auto& r : model::enumerate_params(best))
            data.tensors.emplace_back("best." + r.name, *r.value);
    }
    data.meta_json = meta.dump();
    write_checkpoint_file(path, data);
}

namespace {

void load_params_from(const CheckpointData& data, const std::string& prefix, model::ModelParams& params) {
    for (const auto& r : model::enumerate_params(params)) {
        const Mat& stored = data.require(prefix + r.name);
        if (!stored.same_shape(*r.value))
            throw VersionError("checkpoint tensor " + prefix + r.name + " has shape " +
                               std::to_string(stored.rows) + "x" + std::to_string(stored.cols) +
                               ", expected " + std::to_string(r.value->rows) + "x" +
                               std::to_string(r.value->cols));
        *r.value = stored;
    }
}

pseudo::MemoryBank restore_bank(const CheckpointData& data, const json& meta, int h_width) {
    const Mat& features = data.require("bank.features");
    const Mat& soft = data.require("bank.soft");
    const auto& ids = meta.at("bank").at("ids");
    if (features.rows != static_cast<int>(ids.size()) || features.cols != h_width)
        throw VersionError("checkpoint bank features have unexpected shape");
    std::vector<pseudo::BankEntry> entries;
    for (int i = 0; i < features.rows; ++i) {
        pseudo::BankEntry e;
        e.essay_id = ids[i].get<std::string>();
        e.feature = Mat(1, features.cols);
        for (int j = 0; j < features.cols; ++j) e.feature.a[j] = features.at(i, j);
        e.soft = Mat(1, soft.cols);
        for (int j = 0; j < soft.cols; ++j) e.soft.a[j] = soft.at(i, j);
        entries.push_back(std::move(e));
    }
    return pseudo::MemoryBank::restore(std::move(entries), meta.at("bank").at("lambda").get<double>(),
                                       meta.at("bank").at("tau").get<double>());
}

} // namespace

Trainer Trainer::resume(const std::string& checkpoint_path, corpus::CrossTopicSplit split,
                        corpus::TopicRegistry registry, std::optional<int> epochs_override) {
    CheckpointData data = read_checkpoint_file(checkpoint_path);
    json meta = json::parse(data.meta_json);
    if (meta.value("model_only", false))
        throw VersionError(checkpoint_path + " is a model-only checkpoint and cannot seed a resume");
    TrainConfig cfg = TrainConfig::from_json(meta.at("config").dump(), checkpoint_path);
    if (epochs_override) {
        cfg.epochs = *epochs_override;
        cfg.validate();
    }
    if (meta.at("registry_digest").get<std::string>() != std::to_string(fnv1a(registry.to_json())))
        throw VersionError("checkpoint registry differs from the provided registry");
    if (meta.at("target_topic_id").get<int>() != split.target_topic_id)
        throw VersionError("checkpoint was trained for target topic " +
                           std::to_string(meta.at("target_topic_id").get<int>()));

    Trainer t(std::move(split), std::move(registry), cfg);
    load_params_from(data, "param.", t.bundle_.params);
    load_params_from(data, "best.", t.best_params_);
    t.bundle_.standardizer.mean = data.require("feats.mean");
    t.bundle_.standardizer.std = data.require("feats.std");
    t.bundle_.standardizer.enabled = meta.at("feats_standardized").get<bool>();
    t.bank_ = restore_bank(data, meta, t.bundle_.params.dims.h_width());
    t.iteration_ = meta.at("iteration").get<long>();
    t.epoch_ = meta.at("epoch").get<int>();
    t.metric_history_ = meta.at("metric_history").get<std::vector<double>>();
    t.best_metric_ = meta.at("best_metric").get<double>();
    t.best_epoch_ = meta.at("best_epoch").get<int>();
    auto refs = model::enumerate_params(t.bundle_.params);
    const auto& adam_t = meta.at("adam_t");
    for (std::size_t i = 0; i < refs.size(); ++i) {
        t.adam_[i].t = adam_t.at(refs[i].name).get<long>();
        const Mat* m = data.find("adam.m." + refs[i].name);
        const Mat* v = data.find("adam.v." + refs[i].name);
        if (m && v) {
            t.adam_[i].m = *m;
            t.adam_[i].v = *v;
        }
    }
    if (std::to_string(t.bundle_.be().param_hash()) != meta.at("backend_hash").get<std::string>())
        throw VersionError("checkpoint backend parameters differ (seed or backend mismatch)");
    return t;
}

LoadedCheckpoint load_checkpoint(const std::string& path, const corpus::TopicRegistry& registry) {
    CheckpointData data = read_checkpoint_file(path);
    json meta = json::parse(data.meta_json);
    if (!meta.contains("schema_version") || meta["schema_version"] != kCkptSchema)
        throw VersionError(path + ": unsupported checkpoint schema");
    if (meta.at("registry_digest").get<std::string>() != std::to_string(fnv1a(registry.to_json())))
        throw VersionError("checkpoint registry differs from the provided registry");

    LoadedCheckpoint out;
    out.config = TrainConfig::from_json(meta.at("config").dump(), path);
    out.target_topic_id = meta.at("target_topic_id").get<int>();
    out.epoch = meta.at("epoch").get<int>();
    out.iteration = meta.at("iteration").get<long>();
    out.has_optimizer_state = !meta.value("model_only", false);
    out.best_metric = meta.at("best_metric").get<double>();
    out.best_epoch = meta.at("best_epoch").get<int>();

    model::ModelDims dims;
    dims.d = out.config.backend_dim;
    dims.proj_dim = out.config.proj_dim;
    dims.feat_dim = feats::kFeatureDim;
    dims.K = corpus::kNumTraits;
    dims.clf_hidden = out.config.clf_hidden;
    dims.num_classes = corpus::kNumGrades;
    dims.disc_hidden = out.config.disc_hidden;
    dims.n = out.config.prompt_len_shared;
    dims.m = out.config.prompt_len_specific;
    dims.num_topics = registry.num_topics();
    const auto& src_ids = meta.at("source_topic_ids");
    if (static_cast<int>(src_ids.size()) + 1 != dims.num_topics)
        throw VersionError("checkpoint source topics do not match the registry");

    out.bundle.params = model::ModelParams::init(dims, out.config.seed, out.config.prompt_init_std,
                                                 out.config.prompt_len_specific == 0);
    load_params_from(data, "param.", out.bundle.params);
    out.bundle.backend = enc::make_backend(out.config.backend, dims.d, out.config.seed);
    out.bundle.backend_name = out.config.backend;
    out.bundle.seed = out.config.seed;
    if (std::to_string(out.bundle.be().param_hash()) != meta.at("backend_hash").get<std::string>())
        throw VersionError("checkpoint backend parameters differ (seed or backend mismatch)");
    out.bundle.lexicon = feats::Lexicon::from_text(meta.at("lexicon_text").get<std::string>(), path);
    out.bundle.standardizer.mean = data.require("feats.mean");
    out.bundle.standardizer.std = data.require("feats.std");
    out.bundle.standardizer.enabled = meta.at("feats_standardized").get<bool>();
    out.bank = restore_bank(data, meta, dims.h_width());
    return out;
}

void Trainer::dump_pseudo_labels(const std::string& path) const {
    pseudo::dump_bank_tsv(bank_, config_.knn_k, path);
}

} // namespace ctaes::train
