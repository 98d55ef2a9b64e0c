#include "ctaes/trainer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "ctaes/errors.hpp"

namespace ctaes::train {

using nlohmann::json;

namespace {

constexpr const char* kConfigSchema = "ctaes-config-1";

struct KeyBinding {
    const char* key;
    std::function<void(TrainConfig&, const json&)> set;
    std::function<json(const TrainConfig&)> get;
};

const std::vector<KeyBinding>& bindings() {
    static const std::vector<KeyBinding> b = {
        {"alpha", [](TrainConfig& c, const json& v) { c.alpha = v.get<double>(); },
         [](const TrainConfig& c) { return json(c.alpha); }},
        {"beta", [](TrainConfig& c, const json& v) { c.beta = v.get<double>(); },
         [](const TrainConfig& c) { return json(c.beta); }},
        {"epochs", [](TrainConfig& c, const json& v) { c.epochs = v.get<int>(); },
         [](const TrainConfig& c) { return json(c.epochs); }},
        {"per_topic_batch", [](TrainConfig& c, const json& v) { c.per_topic_batch = v.get<int>(); },
         [](const TrainConfig& c) { return json(c.per_topic_batch); }},
        {"learning_rate", [](TrainConfig& c, const json& v) { c.learning_rate = v.get<double>(); },
         [](const TrainConfig& c) { return json(c.learning_rate); }},
        {"decay_rate", [](TrainConfig& c, const json& v) { c.decay_rate = v.get<double>(); },
         [](const TrainConfig& c) { return json(c.decay_rate); }},
        {"decay_steps", [](TrainConfig& c, const json& v) { c.decay_steps = v.get<int>(); },
         [](const TrainConfig& c) { return json(c.decay_steps); }},
        {"seed", [](TrainConfig& c, const json& v) { c.seed = v.get<std::uint64_t>(); },
         [](const TrainConfig& c) { return json(c.seed); }},
        {"prompt_len_shared", [](TrainConfig& c, const json& v) { c.prompt_len_shared = v.get<int>(); },
         [](const TrainConfig& c) { return json(c.prompt_len_shared); }},
        {"prompt_len_specific", [](TrainConfig& c, const json& v) { c.prompt_len_specific = v.get<int>(); },
         [](const TrainConfig& c) { return json(c.prompt_len_specific); }},
        {"knn_k", [](TrainConfig& c, const json& v) { c.knn_k = v.get<int>(); },
         [](const TrainConfig& c) { return json(c.knn_k); }},
        {"tau", [](TrainConfig& c, const json& v) { c.tau = v.get<double>(); },
         [](const TrainConfig& c) { return json(c.tau); }},
        {"lambda", [](TrainConfig& c, const json& v) { c.lambda = v.get<double>(); },
         [](const TrainConfig& c) { return json(c.lambda); }},
        {"backend", [](TrainConfig& c, const json& v) { c.backend = v.get<std::string>(); },
         [](const TrainConfig& c) { return json(c.backend); }},
        {"backend_dim", [](TrainConfig& c, const json& v) { c.backend_dim = v.get<int>(); },
         [](const TrainConfig& c) { return json(c.backend_dim); }},
        {"proj_dim", [](TrainConfig& c, const json& v) { c.proj_dim = v.get<int>(); },
         [](const TrainConfig& c) { return json(c.proj_dim); }},
        {"clf_hidden", [](TrainConfig& c, const json& v) { c.clf_hidden = v.get<int>(); },
         [](const TrainConfig& c) { return json(c.clf_hidden); }},
        {"disc_hidden", [](TrainConfig& c, const json& v) { c.disc_hidden = v.get<int>(); },
         [](const TrainConfig& c) { return json(c.disc_hidden); }},
        {"grl_coeff", [](TrainConfig& c, const json& v) { c.grl_coeff = v.get<double>(); },
         [](const TrainConfig& c) { return json(c.grl_coeff); }},
        {"clip_norm", [](TrainConfig& c, const json& v) { c.clip_norm = v.get<double>(); },
         [](const TrainConfig& c) { return json(c.clip_norm); }},
        {"prompt_init_std", [](TrainConfig& c, const json& v) { c.prompt_init_std = v.get<double>(); },
         [](const TrainConfig& c) { return json(c.prompt_init_std); }},
        {"standardize_feats", [](TrainConfig& c, const json& v) { c.standardize_feats = v.get<bool>(); },
         [](const TrainConfig& c) { return json(c.standardize_feats); }},
        {"model_selection", [](TrainConfig& c, const json& v) { c.model_selection = v.get<std::string>(); },
         [](const TrainConfig& c) { return json(c.model_selection); }},
        {"val_fraction", [](TrainConfig& c, const json& v) { c.val_fraction = v.get<double>(); },
         [](const TrainConfig& c) { return json(c.val_fraction); }},
        {"max_steps", [](TrainConfig& c, const json& v) { c.max_steps = v.get<int>(); },
         [](const TrainConfig& c) { return json(c.max_steps); }},
        {"lexicon", [](TrainConfig& c, const json& v) { c.lexicon = v.get<std::string>(); },
         [](const TrainConfig& c) { return json(c.lexicon); }},
        {"adam_beta1", [](TrainConfig& c, const json& v) { c.adam_beta1 = v.get<double>(); },
         [](const TrainConfig& c) { return json(c.adam_beta1); }},
        {"adam_beta2", [](TrainConfig& c, const json& v) { c.adam_beta2 = v.get<double>(); },
         [](const TrainConfig& c) { return json(c.adam_beta2); }},
        {"adam_eps", [](TrainConfig& c, const json& v) { c.adam_eps = v.get<double>(); },
         [](const TrainConfig& c) { return json(c.adam_eps); }},
    };
    return b;
}

} // namespace

TrainConfig TrainConfig::from_json(const std::string& text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(origin + ": invalid JSON: " + e.what());
    }
    if (!doc.is_object()) throw ConfigError(origin + ": config must be a JSON object");
    if (!doc.contains("schema_version") || doc["schema_version"] != kConfigSchema)
        throw ConfigError(origin + ": missing or unsupported schema_version (expected " +
                          std::string(kConfigSchema) + ")");
    TrainConfig cfg;
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        if (it.key() == "schema_version") continue;
        bool known = false;
        for (const auto& b : bindings()) {
            if (it.key() == b.key) {
                try {
                    b.set(cfg, it.value());
                } catch (const json::exception& e) {
                    throw ConfigError(origin + ": bad value for key '" + it.key() + "': " + e.what());
                }
                known = true;
                break;
            }
        }
        if (!known) throw ConfigError(origin + ": unknown config key '" + it.key() + "'");
    }
    cfg.validate();
    return cfg;
}

TrainConfig TrainConfig::from_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str(), path);
}

std::string TrainConfig::to_json() const {
    json out;
    out["schema_version"] = kConfigSchema;
    for (const auto& b : bindings()) out[b.key] = b.get(*this);
    return out.dump(2);
}

void TrainConfig::apply_env_overrides() {
    for (const auto& b : bindings()) {
        std::string var = "CTAES_";
        for (const char* p = b.key; *p; ++p) var += static_cast<char>(std::toupper(*p));
        const char* raw = std::getenv(var.c_str());
        if (!raw) continue;
        json v;
        try {
            v = json::parse(raw);
        } catch (const json::exception&) {
            v = json(std::string(raw)); // unquoted strings pass through
        }
        try {
            b.set(*this, v);
        } catch (const json::exception& e) {
            throw ConfigError("bad value in environment override " + var + ": " + e.what());
        }
    }
    validate();
}

void TrainConfig::validate() const {
    if (alpha < 0 || beta < 0) throw ConfigError("alpha and beta must be non-negative");
    if (epochs < 0) throw ConfigError("epochs must be non-negative");
    if (per_topic_batch < 1) throw ConfigError("per_topic_batch must be >= 1");
    if (learning_rate <= 0) throw ConfigError("learning_rate must be positive");
    if (decay_rate <= 0 || decay_rate > 1) throw ConfigError("decay_rate must be in (0, 1]");
    if (decay_steps < 1) throw ConfigError("decay_steps must be >= 1");
    if (prompt_len_shared < 1) throw ConfigError("prompt_len_shared must be >= 1");
    if (prompt_len_specific < 0)
        throw ConfigError("prompt_len_specific must be >= 0 (0 disables specific prompts)");
    if (knn_k < 1) throw ConfigError("knn_k must be >= 1");
    if (tau <= 0) throw ConfigError("tau must be positive");
    if (lambda < 0 || lambda > 1) throw ConfigError("lambda must be in [0, 1]");
    if (backend_dim < 2) throw ConfigError("backend_dim must be >= 2");
    if (proj_dim < 1) throw ConfigError("proj_dim must be >= 1");
    if (clf_hidden < 1 || disc_hidden < 1) throw ConfigError("hidden sizes must be >= 1");
    if (grl_coeff < 0) throw ConfigError("grl_coeff must be >= 0");
    if (clip_norm < 0) throw ConfigError("clip_norm must be >= 0");
    if (prompt_init_std <= 0) throw ConfigError("prompt_init_std must be positive");
    if (model_selection != "target-qwk" && model_selection != "source-val")
        throw ConfigError("model_selection must be 'target-qwk' or 'source-val'");
    if (val_fraction <= 0 || val_fraction >= 1) throw ConfigError("val_fraction must be in (0, 1)");
    if (max_steps < 0) throw ConfigError("max_steps must be >= 0");
    if (adam_beta1 <= 0 || adam_beta1 >= 1 || adam_beta2 <= 0 || adam_beta2 >= 1)
        throw ConfigError("adam betas must be in (0, 1)");
    if (adam_eps <= 0) throw ConfigError("adam_eps must be positive");
}

double TrainConfig::lr_at(long iteration) const {
    long k = iteration / decay_steps;
    return learning_rate * std::pow(decay_rate, static_cast<double>(k));
}

} // namespace ctaes::train
