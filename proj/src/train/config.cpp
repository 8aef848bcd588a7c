// Copyright (c) 2026 geode-lab authors
// SPDX-License-Identifier: Apache-2.0

#include "train/config.hpp"

#include <sstream>

#include "core/error.hpp"

namespace geode {

using nlohmann::json;

json default_config() {
    return json{
        {"seed", 1},
        {"run_dir", "runs/run"},
        {"data",
         {{"out_dir", "data/train"},
          {"seed", 1},
          {"scenes", 50},
          {"samples_per_scene", 8},
          {"n_frames", 16},
          {"min_room", 3.0},
          {"max_room", 10.0},
          {"min_room_h", 2.5},
          {"max_room_h", 3.5},
          {"min_objects", 3},
          {"max_objects", 10},
          {"grid", 16},
          {"fov_deg", 70.0},
          {"min_points", 256},
          {"max_points", 4096},
          {"max_footprint_overlap", 0.10}}},
        {"model",
         {{"layers", 4},
          {"heads", 4},
          {"d_model", 64},
          {"context", 256},
          {"d_3d", 64},
          {"m_tokens", 16},
          {"pool_tokens", 16},
          {"patch", 4},
          {"drh_hidden", 64}}},
        {"optim",
         {{"lr", 3e-4},
          {"weight_decay", 0.01},
          {"clip", 1.0},
          {"warmup_steps", 50}}},
        {"pretrain",
         {{"sequences", 10000},
          {"corpus_seed", 900000},
          {"epochs", 1},
          {"batch", 32},
          {"out", "runs/lm.geod"},
          {"metrics", "runs/lm_metrics.jsonl"}}},
        {"stage1",
         {{"data_dir", "data/train"},
          {"lm_checkpoint", "runs/lm.geod"},
          {"epochs", 3},
          {"batch", 16},
          {"n_frames", 8},
          {"out", "runs/stage1.geod"},
          {"metrics", "runs/stage1_metrics.jsonl"}}},
        {"stage2",
         {{"data_dir", "data/train"},
          {"lm_checkpoint", "runs/lm.geod"},
          {"stage1_checkpoint", "runs/stage1.geod"},
          {"arm", "full"},
          {"epochs", 3},
          {"batch", 16},
          {"lambda", 1.0},
          {"n_frames", 8},
          {"out", "runs/stage2.geod"},
          {"metrics", "runs/stage2_metrics.jsonl"}}},
        {"eval",
         {{"data_dir", "data/eval"},
          {"checkpoint", "runs/stage2.geod"},
          {"arm", "full"},
          {"n_frames", 8},
          {"max_new_tokens", 96},
          {"out_csv", "runs/eval.csv"},
          {"report_json", "runs/eval.json"}}},
        {"ablate",
         {{"arms", json::array({"sft_only", "sft_drh", "sft_drm", "full"})},
          {"seeds", json::array({1, 2, 3})},
          {"train_data_dir", "data/train"},
          {"eval_data_dir", "data/eval"},
          {"lm_checkpoint", "runs/lm.geod"},
          {"out_dir", "runs/ablate"},
          {"out_csv", "runs/ablate/grid.csv"}}},
        {"report",
         {{"inputs", json::array({"runs/ablate/grid.csv"})},
          {"out", "runs/report.txt"}}},
    };
}

namespace {

bool type_compatible(const json& def, const json& val) {
    if (def.is_number_integer() && val.is_number_integer()) return true;
    if (def.is_number_float() && val.is_number()) return true;
    if (def.is_string() && val.is_string()) return true;
    if (def.is_boolean() && val.is_boolean()) return true;
    if (def.is_array() && val.is_array()) return true;
    if (def.is_object() && val.is_object()) return true;
    return false;
}

void merge_checked(json& base, const json& user, const std::string& path) {
    for (auto it = user.begin(); it != user.end(); ++it) {
        const std::string key = path.empty() ? it.key() : path + "." + it.key();
        if (!base.contains(it.key())) throw ConfigError("unknown config key: " + key);
        json& slot = base[it.key()];
        if (slot.is_object() && it->is_object()) {
            merge_checked(slot, *it, key);
            continue;
        }
        if (!type_compatible(slot, *it))
            throw ConfigError("config key has the wrong type: " + key);
        slot = *it;
    }
}

void walk_schema(const json& node, const std::string& path, std::ostringstream& out) {
    for (auto it = node.begin(); it != node.end(); ++it) {
        const std::string key = path.empty() ? it.key() : path + "." + it.key();
        if (it->is_object()) {
            walk_schema(*it, key, out);
        } else {
            out << key << "  (" << it->type_name() << ")  default: " << it->dump() << "\n";
        }
    }
}

}  // namespace

void apply_override(json& cfg, const std::string& spec) {
    const size_t eq = spec.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("override must have the form key.path=value: " + spec);
    const std::string key = spec.substr(0, eq);
    const std::string raw = spec.substr(eq + 1);

    json* slot = &cfg;
    std::istringstream parts(key);
    std::string part;
    while (std::getline(parts, part, '.')) {
        if (!slot->is_object() || !slot->contains(part))
            throw ConfigError("unknown config key: " + key);
        slot = &(*slot)[part];
    }
    if (slot->is_object()) throw ConfigError("cannot override a config section: " + key);

    json val;
    try {
        val = json::parse(raw);
    } catch (const json::parse_error&) {
        val = raw;  // bare strings need no quoting
    }
    if (!type_compatible(*slot, val))
        throw ConfigError("override value has the wrong type for key: " + key);
    *slot = val;
}

json resolve_config(const json& user, const std::vector<std::string>& overrides) {
    json cfg = default_config();
    if (!user.is_null()) {
        if (!user.is_object()) throw ConfigError("config root must be a JSON object");
        merge_checked(cfg, user, "");
    }
    for (const auto& spec : overrides) apply_override(cfg, spec);
    return cfg;
}

std::string schema_text() {
    std::ostringstream out;
    out << "configuration keys (dotted), value type and default:\n";
    walk_schema(default_config(), "", out);
    return out.str();
}

}  // namespace geode
