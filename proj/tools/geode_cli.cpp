// Copyright (c) 2026 geode-lab authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end over the C API. One verb per invocation; JSON
// config plus dotted --set overrides. Exit codes: 0 success, 1 config
// error, 2 runtime failure.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "geode/geode.h"

namespace {

int status_to_exit(geode_status st) {
    switch (st) {
        case GEODE_OK: return 0;
        case GEODE_ERR_CONFIG: return 1;
        case GEODE_ERR_ARG: return 1;
        case GEODE_ERR_RUNTIME: return 2;
    }
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"geode: synthetic spatial-QA pipeline (data, training, evaluation)"};
    app.require_subcommand(0, 1);

    std::string config_path;
    std::vector<std::string> overrides;
    bool print_schema = false;

    app.add_flag("--print-schema", print_schema, "list every config key, type and default");

    const std::vector<std::string> verbs = {"gen-data",      "pretrain-lm", "train-stage1",
                                            "train-stage2",  "eval",        "ablate",
                                            "report"};
    for (const auto& v : verbs) {
        CLI::App* sub = app.add_subcommand(v);
        sub->add_option("--config", config_path, "JSON config file");
        sub->add_option("--set", overrides, "dotted key=value override (repeatable)");
    }

    CLI11_PARSE(app, argc, argv);

    if (print_schema) {
        char* schema = geode_schema_text();
        std::fputs(schema, stdout);
        geode_string_free(schema);
        return 0;
    }
    if (app.get_subcommands().empty()) {
        std::fputs(app.help().c_str(), stderr);
        return 1;
    }
    const std::string verb = app.get_subcommands()[0]->get_name();

    // GEODE_LAB_THREADS caps worker count; this build is sequential, so
    // anything >= 1 is accepted and treated as 1.
    if (const char* threads = std::getenv("GEODE_LAB_THREADS")) {
        const long n = std::strtol(threads, nullptr, 10);
        if (n < 1) {
            std::fprintf(stderr, "error: GEODE_LAB_THREADS must be a positive integer\n");
            return 1;
        }
    }

    std::string config_text;
    if (!config_path.empty()) {
        std::ifstream is(config_path);
        if (!is) {
            std::fprintf(stderr, "error: cannot read config file: %s\n", config_path.c_str());
            return 1;
        }
        std::ostringstream os;
        os << is.rdbuf();
        config_text = os.str();
    }

    geode_session* session = geode_session_new();
    if (!session) {
        std::fprintf(stderr, "error: out of memory\n");
        return 2;
    }

    std::vector<const char*> ov;
    for (const auto& o : overrides) ov.push_back(o.c_str());

    char* resolved = nullptr;
    geode_status st = geode_resolve_config(session, config_text.c_str(), ov.data(), ov.size(),
                                           &resolved);
    if (st != GEODE_OK) {
        std::fprintf(stderr, "error: %s\n", geode_session_last_error(session));
        geode_session_free(session);
        return status_to_exit(st);
    }

    st = geode_run(session, verb.c_str(), resolved);
    if (st != GEODE_OK)
        std::fprintf(stderr, "error: %s\n", geode_session_last_error(session));
    geode_string_free(resolved);
    const int code = status_to_exit(st);
    geode_session_free(session);
    return code;
}
