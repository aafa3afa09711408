#include "fgt2m/config.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>

namespace fgt2m {

using nlohmann::json;

const std::vector<RunConfig::KeySpec>& RunConfig::known_keys() {
    static const std::vector<KeySpec> keys = {
        {"diffusion.steps", std::int64_t{1000}, "number of diffusion steps T"},
        {"diffusion.beta_start", 1e-4, "first beta of the linear schedule"},
        {"diffusion.beta_end", 0.02, "last beta of the linear schedule"},
        {"diffusion.clamp", 0.0, "clamp |x0_hat| during sampling (0 disables)"},

        {"model.width", std::int64_t{64}, "denoiser model width"},
        {"model.heads", std::int64_t{4}, "attention heads per block"},
        {"model.capr_blocks", std::int64_t{3}, "stacked reasoning blocks"},
        {"model.lambda", 0.1, "sentence-fusion gain"},
        {"model.mlp_mult", std::int64_t{4}, "MLP expansion factor"},
        {"model.block_layer_order", std::string{"deep_first"},
         "GAT layer consumption order: deep_first | shallow_first"},

        {"text.embed_dim", std::int64_t{64}, "word embedding width (equals GAT width)"},
        {"text.n_max", std::int64_t{16}, "padded word positions"},

        {"lsam.gat_layers", std::int64_t{3}, "stacked GAT layers"},
        {"lsam.heads", std::int64_t{1}, "attention heads per GAT layer"},
        {"lsam.edge_dim", std::int64_t{16}, "relation embedding width"},
        {"lsam.leaky_slope", 0.2, "LeakyReLU slope in attention logits"},
        {"lsam.upos_gains", true, "learnable per-UPOS input gains"},

        {"data.records", std::int64_t{2000}, "records to generate"},
        {"data.frames", std::int64_t{64}, "motion frames per record"},
        {"data.seed", std::int64_t{7}, "dataset generation seed"},

        {"train.lr", 5e-5, "Adam learning rate"},
        {"train.batch", std::int64_t{128}, "batch size"},
        {"train.iters", std::int64_t{80000}, "training iterations"},
        {"train.seed", std::int64_t{11}, "training seed"},
        {"train.log_every", std::int64_t{50}, "loss log cadence (iterations)"},
        {"train.early_stop_patience", std::int64_t{0},
         "log points without improvement before stopping (0 disables)"},
        {"train.eval_every", std::int64_t{0}, "periodic quick-eval cadence (0 disables)"},
        {"train.holdout_frac", 0.1, "fraction of records held out from training"},

        {"eval.seed", std::int64_t{17}, "evaluation seed"},
        {"eval.repeats", std::int64_t{5}, "seeded metric repeats for +/- spreads"},
        {"eval.max_captions", std::int64_t{0}, "cap on distinct held-out captions (0 = all)"},
        {"eval.diversity_subset", std::int64_t{50}, "diversity subset size"},
        {"eval.mm_texts", std::int64_t{8}, "captions used for multimodality"},
        {"eval.mm_repeats", std::int64_t{32}, "generations per caption for multimodality"},
        {"eval.mm_pairs", std::int64_t{8}, "sampled pairs per caption for multimodality"},
        {"eval.embedder_iters", std::int64_t{600}, "joint embedder training iterations"},
        {"eval.embedder_batch", std::int64_t{64}, "joint embedder batch size"},
        {"eval.embedder_lr", 1e-3, "joint embedder learning rate"},
        {"eval.embedder_tau", 0.07, "contrastive temperature"},

        {"ablation.lsam_off", false, "replace LSAM with one repeated sentence embedding"},
        {"ablation.capr1_off", false, "disable sentence-level feature fusion"},
        {"ablation.capr2_off", false, "disable word-level cross-attention"},
        {"ablation.block_layer_order", std::string{""},
         "override of model.block_layer_order (empty defers)"},

        {"runtime.threads", std::int64_t{0}, "worker threads (0 = OpenMP default)"},
        {"runtime.policy", std::string{"openmp"}, "execution policy: openmp | serial"},
    };
    return keys;
}

RunConfig::RunConfig() {
    for (const auto& spec : known_keys()) values_[spec.key] = spec.default_value;
}

const RunConfig::Value& RunConfig::at(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
    return it->second;
}

void RunConfig::set(const std::string& key, Value v) {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
    // arriving type must match the default's type, except int→double widening
    if (it->second.index() != v.index()) {
        if (std::holds_alternative<double>(it->second) && std::holds_alternative<std::int64_t>(v)) {
            v = static_cast<double>(std::get<std::int64_t>(v));
        } else {
            throw ConfigError("config key '" + key + "' has the wrong type");
        }
    }
    it->second = std::move(v);
}

void RunConfig::load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config file '" + path.string() + "' is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config file must hold a JSON object of flat keys");
    for (const auto& [key, value] : j.items()) {
        if (value.is_boolean()) {
            set(key, value.get<bool>());
        } else if (value.is_number_integer()) {
            set(key, value.get<std::int64_t>());
        } else if (value.is_number_float()) {
            set(key, value.get<double>());
        } else if (value.is_string()) {
            set(key, value.get<std::string>());
        } else {
            throw ConfigError("config key '" + key + "' must be a scalar");
        }
    }
}

void RunConfig::apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("override must look like key=value, got '" + assignment + "'");
    const std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    const Value& current = at(key);
    try {
        if (std::holds_alternative<bool>(current)) {
            if (raw == "true" || raw == "1") {
                set(key, true);
            } else if (raw == "false" || raw == "0") {
                set(key, false);
            } else {
                throw ConfigError("expected true/false");
            }
        } else if (std::holds_alternative<std::int64_t>(current)) {
            std::size_t used = 0;
            const long long v = std::stoll(raw, &used);
            if (used != raw.size()) throw ConfigError("trailing characters");
            set(key, static_cast<std::int64_t>(v));
        } else if (std::holds_alternative<double>(current)) {
            std::size_t used = 0;
            const double v = std::stod(raw, &used);
            if (used != raw.size()) throw ConfigError("trailing characters");
            set(key, v);
        } else {
            set(key, raw);
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        throw ConfigError("cannot parse value '" + raw + "' for key '" + key + "'");
    }
}

void RunConfig::apply_env(const char* env_value) {
    if (!env_value || !*env_value) return;
    std::size_t used = 0;
    std::int64_t seed = 0;
    try {
        seed = static_cast<std::int64_t>(std::stoll(env_value, &used));
    } catch (const std::exception&) {
        throw ConfigError("FGT2M_SEED must be an integer");
    }
    if (used != std::string(env_value).size()) throw ConfigError("FGT2M_SEED must be an integer");
    set("data.seed", seed);
    set("train.seed", seed);
    set("eval.seed", seed);
}

bool RunConfig::get_bool(const std::string& key) const {
    const Value& v = at(key);
    if (!std::holds_alternative<bool>(v)) throw ConfigError("config key '" + key + "' is not a bool");
    return std::get<bool>(v);
}

std::int64_t RunConfig::get_int(const std::string& key) const {
    const Value& v = at(key);
    if (!std::holds_alternative<std::int64_t>(v)) throw ConfigError("config key '" + key + "' is not an int");
    return std::get<std::int64_t>(v);
}

double RunConfig::get_double(const std::string& key) const {
    const Value& v = at(key);
    if (std::holds_alternative<double>(v)) return std::get<double>(v);
    if (std::holds_alternative<std::int64_t>(v)) return static_cast<double>(std::get<std::int64_t>(v));
    throw ConfigError("config key '" + key + "' is not numeric");
}

std::string RunConfig::get_string(const std::string& key) const {
    const Value& v = at(key);
    if (!std::holds_alternative<std::string>(v)) throw ConfigError("config key '" + key + "' is not a string");
    return std::get<std::string>(v);
}

std::string RunConfig::dump() const {
    json j = json::object();
    for (const auto& [key, v] : values_) {
        std::visit([&](const auto& x) { j[key] = x; }, v);
    }
    return j.dump(2);
}

} // namespace fgt2m
