// Copyright (c) 2026 geode-lab authors
// SPDX-License-Identifier: Apache-2.0

#include "geode/geode.h"

#include <cstring>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/error.hpp"
#include "eval/evalbench.hpp"
#include "train/config.hpp"
#include "train/trainer.hpp"

struct geode_session {
    std::string last_error;
};

namespace {

using nlohmann::json;

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

geode_status fail(geode_session* s, geode_status code, const std::string& msg) {
    if (s) s->last_error = msg;
    return code;
}

}  // namespace

extern "C" {

geode_session* geode_session_new(void) { return new (std::nothrow) geode_session(); }

void geode_session_free(geode_session* s) { delete s; }

const char* geode_session_last_error(const geode_session* s) {
    return s ? s->last_error.c_str() : "";
}

geode_status geode_resolve_config(geode_session* s, const char* config_json,
                                  const char* const* overrides, size_t n_overrides,
                                  char** out_resolved_json) {
    if (!s || !out_resolved_json || (n_overrides > 0 && !overrides))
        return fail(s, GEODE_ERR_ARG, "null argument");
    try {
        json user;
        if (config_json && *config_json) user = json::parse(config_json);
        std::vector<std::string> ov;
        for (size_t i = 0; i < n_overrides; ++i) {
            if (!overrides[i]) return fail(s, GEODE_ERR_ARG, "null override entry");
            ov.emplace_back(overrides[i]);
        }
        const json resolved = geode::resolve_config(user, ov);
        *out_resolved_json = dup_string(resolved.dump(2));
        s->last_error.clear();
        return GEODE_OK;
    } catch (const json::parse_error& e) {
        return fail(s, GEODE_ERR_CONFIG, std::string("config is not valid JSON: ") + e.what());
    } catch (const geode::ConfigError& e) {
        return fail(s, GEODE_ERR_CONFIG, e.what());
    } catch (const std::exception& e) {
        return fail(s, GEODE_ERR_RUNTIME, e.what());
    }
}

char* geode_schema_text(void) { return dup_string(geode::schema_text()); }

void geode_string_free(char* s) { std::free(s); }

geode_status geode_run(geode_session* s, const char* verb, const char* resolved_config_json) {
    if (!s || !verb || !resolved_config_json) return fail(s, GEODE_ERR_ARG, "null argument");
    try {
        const json cfg = json::parse(resolved_config_json);
        const std::string v = verb;
        if (v == "gen-data") {
            geode::cmd_gen_data(cfg);
        } else if (v == "pretrain-lm") {
            geode::cmd_pretrain_lm(cfg);
        } else if (v == "train-stage1") {
            geode::cmd_train_stage1(cfg);
        } else if (v == "train-stage2") {
            geode::cmd_train_stage2(cfg);
        } else if (v == "eval") {
            geode::cmd_eval(cfg);
        } else if (v == "ablate") {
            geode::cmd_ablate(cfg);
        } else if (v == "report") {
            geode::cmd_report(cfg);
        } else {
            return fail(s, GEODE_ERR_ARG, "unknown verb: " + v);
        }
        s->last_error.clear();
        return GEODE_OK;
    } catch (const json::parse_error& e) {
        return fail(s, GEODE_ERR_CONFIG, std::string("config is not valid JSON: ") + e.what());
    } catch (const geode::ConfigError& e) {
        return fail(s, GEODE_ERR_CONFIG, e.what());
    } catch (const std::exception& e) {
        return fail(s, GEODE_ERR_RUNTIME, e.what());
    }
}

}  // extern "C"
