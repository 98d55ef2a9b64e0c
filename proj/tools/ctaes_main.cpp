#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ctaes/corpus.hpp"
#include "ctaes/errors.hpp"
#include "ctaes/metrics.hpp"
#include "ctaes/pseudo.hpp"
#include "ctaes/synth.hpp"
#include "ctaes/trainer.hpp"
#include "ctaes/util.hpp"

#ifndef CTAES_CODE_VERSION
#define CTAES_CODE_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ctaes;

namespace {

corpus::TopicRegistry load_registry_arg(const std::string& arg) {
    if (arg == "asap") return corpus::builtin_asap_registry();
    return corpus::TopicRegistry::load_json(arg);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FileError("cannot write " + path);
    out << text;
}

struct PreparedInputs {
    corpus::TopicRegistry registry;
    std::vector<corpus::EssayRecord> records;
};

PreparedInputs load_prepared(const std::string& dir) {
    auto registry = corpus::TopicRegistry::load_json(dir + "/registry.json");
    auto records = corpus::load_records(dir + "/records.tsv", registry);
    return {std::move(registry), std::move(records)};
}

int cmd_prepare(const std::string& data_path, const std::string& registry_arg, const std::string& out_dir) {
    if (registry_arg != "asap" && !fs::exists(registry_arg))
        throw ConfigError("registry file not found: " + registry_arg);
    if (!fs::exists(data_path)) throw ConfigError("data file not found: " + data_path);
    auto registry = load_registry_arg(registry_arg);
    auto records = corpus::load_dataset(data_path, registry);
    fs::create_directories(out_dir);

    corpus::save_records(out_dir + "/records.tsv", records);
    registry.save_json(out_dir + "/registry.json");

    json manifest;
    manifest["created"] = util::iso8601_utc_now();
    manifest["code_version"] = CTAES_CODE_VERSION;
    manifest["inputs"] = {{"data", util::sha256_file_hex(data_path)}};
    if (registry_arg != "asap") manifest["inputs"]["registry"] = util::sha256_file_hex(registry_arg);
    json splits = json::array();

    int made = 0;
    for (const auto& spec : registry.topics()) {
        bool present = false;
        for (const auto& r : records)
            if (r.topic_id == spec.topic_id) {
                present = true;
                break;
            }
        if (!present) continue;
        auto split = corpus::make_cross_topic_split(records, spec.topic_id, registry);
        std::string split_dir = out_dir + "/split_t" + std::to_string(spec.topic_id);
        fs::create_directories(split_dir);
        corpus::save_split_manifest(split_dir + "/manifest.tsv", split);
        split.gold.save_tsv(split_dir + "/gold.tsv");
        json js;
        js["target_topic_id"] = spec.topic_id;
        js["manifest"] = util::sha256_file_hex(split_dir + "/manifest.tsv");
        js["gold"] = util::sha256_file_hex(split_dir + "/gold.tsv");
        splits.push_back(js);
        ++made;
    }
    manifest["outputs"] = {{"records", util::sha256_file_hex(out_dir + "/records.tsv")},
                           {"registry", util::sha256_file_hex(out_dir + "/registry.json")},
                           {"splits", splits}};
    write_text(out_dir + "/prepare_manifest.json", manifest.dump(2) + "\n");
    std::cout << "prepared " << records.size() << " essays, " << made << " cross-topic splits under "
              << out_dir << "\n";
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& prepared_dir, int target_topic,
              const std::string& out_dir, const std::string& backend_override, int steps_override,
              std::optional<std::uint64_t> seed_override, std::optional<int> epochs_override,
              const std::string& resume_path) {
    train::TrainConfig cfg = train::TrainConfig::from_json_file(config_path);
    cfg.apply_env_overrides();
    if (!backend_override.empty()) cfg.backend = backend_override;
    if (steps_override > 0) cfg.max_steps = steps_override;
    if (seed_override) cfg.seed = *seed_override;
    if (epochs_override && resume_path.empty()) cfg.epochs = *epochs_override;
    cfg.validate();

    auto prepared = load_prepared(prepared_dir);
    auto split = corpus::make_cross_topic_split(prepared.records, target_topic, prepared.registry);

    fs::create_directories(out_dir);
    json manifest;
    manifest["run_id"] = util::sha256_hex(cfg.to_json() + "|" + std::to_string(target_topic) + "|" +
                                          util::sha256_file_hex(prepared_dir + "/records.tsv"))
                             .substr(0, 16);
    manifest["created"] = util::iso8601_utc_now();
    manifest["code_version"] = CTAES_CODE_VERSION;
    manifest["config"] = json::parse(cfg.to_json());
    manifest["target_topic_id"] = target_topic;
    manifest["inputs"] = {{"records", util::sha256_file_hex(prepared_dir + "/records.tsv")},
                          {"registry", util::sha256_file_hex(prepared_dir + "/registry.json")},
                          {"config", util::sha256_file_hex(config_path)}};
    manifest["outputs"] = {{"checkpoint_last", out_dir + "/last.ckpt"},
                           {"checkpoint_best", out_dir + "/best.ckpt"},
                           {"train_log", out_dir + "/train_log.tsv"}};
    // The manifest lands before any other output file.
    write_text(out_dir + "/run_manifest.json", manifest.dump(2) + "\n");

    auto trainer = resume_path.empty()
                       ? train::Trainer(std::move(split), prepared.registry, cfg)
                       : train::Trainer::resume(resume_path, std::move(split), prepared.registry,
                                                epochs_override);
    trainer.set_output_dir(out_dir);
    auto result = trainer.fit();
    std::cout << "trained " << result.iterations << " iterations; best epoch " << result.best_epoch
              << " with metric " << result.best_metric << "\n";
    std::cout << "checkpoints and log written under " << out_dir << "\n";
    return 0;
}

metrics::TopicReport eval_one(const std::string& ckpt_path, const PreparedInputs& prepared,
                              int target_topic, const std::string& out_dir, bool dump_embeddings,
                              bool dump_pseudo) {
    auto loaded = train::load_checkpoint(ckpt_path, prepared.registry);
    if (loaded.target_topic_id != target_topic)
        throw VersionError("checkpoint was trained for target topic " +
                           std::to_string(loaded.target_topic_id) + ", not " +
                           std::to_string(target_topic));
    auto split = corpus::make_cross_topic_split(prepared.records, target_topic, prepared.registry);
    auto report = metrics::Evaluator::evaluate(loaded.bundle, split, prepared.registry);
    if (dump_embeddings)
        metrics::dump_embeddings(loaded.bundle, split, prepared.registry,
                                 out_dir + "/embeddings_t" + std::to_string(target_topic) + ".tsv");
    if (dump_pseudo)
        pseudo::dump_bank_tsv(loaded.bank, loaded.config.knn_k,
                              out_dir + "/pseudo_labels_t" + std::to_string(target_topic) + ".tsv");
    return report;
}

int cmd_eval(const std::string& ckpt_path, const std::string& runs_dir, const std::string& prepared_dir,
             const std::string& target_arg, const std::string& out_dir, bool dump_embeddings,
             bool dump_pseudo) {
    auto prepared = load_prepared(prepared_dir);
    fs::create_directories(out_dir);
    metrics::Report report;
    if (target_arg == "all") {
        if (runs_dir.empty())
            throw ConfigError("--target-topic all needs --runs-dir with t<ID>/best.ckpt per topic");
        for (const auto& spec : prepared.registry.topics()) {
            std::string path = runs_dir + "/t" + std::to_string(spec.topic_id) + "/best.ckpt";
            if (!fs::exists(path)) throw FileError("missing checkpoint " + path);
            report.topics.push_back(eval_one(path, prepared, spec.topic_id, out_dir, dump_embeddings,
                                             dump_pseudo));
        }
    } else {
        int topic = std::stoi(target_arg);
        if (ckpt_path.empty()) throw ConfigError("--checkpoint is required unless --target-topic all");
        report.topics.push_back(eval_one(ckpt_path, prepared, topic, out_dir, dump_embeddings,
                                         dump_pseudo));
    }
    report.finalize();
    write_text(out_dir + "/report.txt", report.to_text());
    write_text(out_dir + "/report.tsv", report.to_tsv());
    std::cout << report.to_text();
    return 0;
}

int cmd_synth(const std::string& out_dir, int essays_per_topic, std::uint64_t seed) {
    fs::create_directories(out_dir);
    synth::SynthSpec spec;
    spec.essays_per_topic = essays_per_topic;
    spec.seed = seed;
    write_text(out_dir + "/data.tsv", synth::synth_dataset_tsv(spec));
    synth::synth_registry().save_json(out_dir + "/registry.json");
    std::cout << "wrote synthetic corpus (" << 3 * essays_per_topic << " essays) under " << out_dir
              << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"cross-topic automated essay scoring with adversarial topic-aware prompt tuning"};
    app.require_subcommand(1);

    // prepare
    auto* prep = app.add_subcommand("prepare", "ingest a dataset and build leave-one-topic-out splits");
    std::string data_path, registry_arg, prep_out;
    prep->add_option("--data", data_path, "tab-separated dataset file")->required();
    prep->add_option("--registry", registry_arg, "topic registry JSON, or 'asap' for the built-in one")
        ->required();
    prep->add_option("--out", prep_out, "output directory")->required();

    // train
    auto* tr = app.add_subcommand("train", "train a model for one target topic");
    std::string config_path, prepared_dir, train_out, backend_override, resume_path;
    int target_topic = -1, steps_override = 0;
    std::optional<std::uint64_t> seed_override;
    std::optional<int> epochs_override;
    tr->add_option("--config", config_path, "training config JSON")->required();
    tr->add_option("--prepared", prepared_dir, "directory produced by 'prepare'")->required();
    tr->add_option("--target-topic", target_topic, "held-out target topic id")->required();
    tr->add_option("--out", train_out, "run output directory")->required();
    tr->add_option("--backend", backend_override, "override the encoder backend");
    tr->add_option("--steps", steps_override, "cap the number of training iterations");
    tr->add_option("--seed", seed_override, "override the root seed");
    tr->add_option("--epochs", epochs_override, "override the epoch count");
    tr->add_option("--resume", resume_path, "resume from a full checkpoint");

    // eval
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint against sealed gold labels");
    std::string ckpt_path, runs_dir, eval_prepared, eval_target, eval_out;
    bool dump_embeddings = false, dump_pseudo = false;
    ev->add_option("--checkpoint", ckpt_path, "checkpoint file (single-topic mode)");
    ev->add_option("--runs-dir", runs_dir, "directory of t<ID>/best.ckpt runs (for --target-topic all)");
    ev->add_option("--prepared", eval_prepared, "directory produced by 'prepare'")->required();
    ev->add_option("--target-topic", eval_target, "target topic id, or 'all'")->required();
    ev->add_option("--out", eval_out, "report output directory")->required();
    ev->add_flag("--dump-embeddings", dump_embeddings, "write h features for every essay");
    ev->add_flag("--dump-pseudo-labels", dump_pseudo, "write the memory-bank pseudo-label table");

    // synth
    auto* sy = app.add_subcommand("synth", "generate the desk-scale synthetic corpus");
    std::string synth_out;
    int synth_essays = 400;
    std::uint64_t synth_seed = 7;
    sy->add_option("--out", synth_out, "output directory")->required();
    sy->add_option("--essays-per-topic", synth_essays, "essays per topic");
    sy->add_option("--seed", synth_seed, "generator seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e); // prints usage or help text
        return rc == 0 ? 0 : 1;
    }

    try {
        if (prep->parsed()) return cmd_prepare(data_path, registry_arg, prep_out);
        if (tr->parsed())
            return cmd_train(config_path, prepared_dir, target_topic, train_out, backend_override,
                             steps_override, seed_override, epochs_override, resume_path);
        if (ev->parsed())
            return cmd_eval(ckpt_path, runs_dir, eval_prepared, eval_target, eval_out, dump_embeddings,
                            dump_pseudo);
        if (sy->parsed()) return cmd_synth(synth_out, synth_essays, synth_seed);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.exit_code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
