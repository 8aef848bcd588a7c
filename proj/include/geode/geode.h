/* Copyright (c) 2026 geode-lab authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the geode pipeline. All strings are UTF-8; strings
 * returned through char** out parameters are owned by the caller and
 * must be released with geode_string_free.
 */

#ifndef GEODE_GEODE_H
#define GEODE_GEODE_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct geode_session geode_session;

typedef enum {
    GEODE_OK = 0,
    GEODE_ERR_CONFIG = 1,  /* bad config key, type, value or file */
    GEODE_ERR_RUNTIME = 2, /* pipeline failure during a run */
    GEODE_ERR_ARG = 3      /* null pointer / unknown verb */
} geode_status;

geode_session* geode_session_new(void);
void geode_session_free(geode_session* s);

/* Message of the most recent failure on this session; empty string when
 * the last call succeeded. Owned by the session. */
const char* geode_session_last_error(const geode_session* s);

/* Merge config_json (may be NULL or empty for pure defaults) over the
 * built-in defaults, then apply dotted key=value overrides. On success
 * *out_resolved_json receives the full resolved tree. */
geode_status geode_resolve_config(geode_session* s, const char* config_json,
                                  const char* const* overrides, size_t n_overrides,
                                  char** out_resolved_json);

/* Human-readable listing of every config key, type and default. */
char* geode_schema_text(void);

void geode_string_free(char* s);

/* Execute one pipeline verb with a resolved config tree. Verbs:
 * gen-data, pretrain-lm, train-stage1, train-stage2, eval, ablate,
 * report. */
geode_status geode_run(geode_session* s, const char* verb, const char* resolved_config_json);

#ifdef __cplusplus
}
#endif

#endif /* GEODE_GEODE_H */
