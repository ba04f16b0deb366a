/******************************************************************************
 * Copyright 2026 The AdvLidar Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *****************************************************************************/

#pragma once

/* C interface to the workbench. Every call returns an advl_status; on
 * failure advl_last_error() describes the problem for the calling thread.
 * Strings handed out through char** are owned by the caller and released
 * with advl_string_free. */

#include <stddef.h>
#include <stdint.h>

#if defined(ADVL_BUILDING_LIBRARY)
#define ADVL_API __attribute__((visibility("default")))
#else
#define ADVL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum advl_status {
  ADVL_OK = 0,
  ADVL_INVALID_ARGUMENT = 1,
  ADVL_PARSE = 2,
  ADVL_VALIDATION = 3,
  ADVL_CAPABILITY = 4,
  ADVL_PRECONDITION = 5,
  ADVL_RANGE = 6,
  ADVL_IO = 7,
  ADVL_NUMERICAL = 8,
  ADVL_INTERNAL = 9
} advl_status;

/* Harness configuration plus the detector built from it. */
typedef struct advl_session advl_session;
typedef struct advl_cloud advl_cloud;

ADVL_API const char* advl_version(void);
ADVL_API const char* advl_status_name(advl_status status);
ADVL_API const char* advl_last_error(void);
/* Nonzero for statuses that mean the input was rejected. */
ADVL_API int advl_status_is_validation(advl_status status);
ADVL_API void advl_string_free(char* s);

/* config_json may be NULL for the built-in defaults. */
ADVL_API advl_status advl_session_create(const char* config_json,
                                         advl_session** out);
ADVL_API advl_status advl_session_create_from_file(const char* path,
                                                   advl_session** out);
ADVL_API void advl_session_destroy(advl_session* session);
ADVL_API advl_status advl_session_set_seed(advl_session* session,
                                           uint64_t seed);
/* Restricts experiments to one budget and sets the scenario budget. */
ADVL_API advl_status advl_session_set_budget(advl_session* session,
                                             int budget);
/* "vanilla" or "sampling". Restricts experiments to that mode. */
ADVL_API advl_status advl_session_set_mode(advl_session* session,
                                           const char* mode);
ADVL_API advl_status advl_session_set_scenes(advl_session* session,
                                             int scenes);
/* Replaces the detector parameters with a surrogate config file. */
ADVL_API advl_status advl_session_load_detector(advl_session* session,
                                                const char* path);
ADVL_API advl_status advl_session_config_json(const advl_session* session,
                                              char** out);

/* Format follows the extension: .csv for text, anything else binary. */
ADVL_API advl_status advl_cloud_load(const char* path, advl_cloud** out);
/* xyzi holds n points as x, y, z, intensity. */
ADVL_API advl_status advl_cloud_from_array(const double* xyzi, size_t n,
                                           advl_cloud** out);
ADVL_API size_t advl_cloud_size(const advl_cloud* cloud);
ADVL_API advl_status advl_cloud_copy_points(const advl_cloud* cloud,
                                            double* xyzi, size_t capacity);
ADVL_API advl_status advl_cloud_save(const advl_cloud* cloud,
                                     const char* path);
ADVL_API void advl_cloud_destroy(advl_cloud* cloud);
/* The index-th seeded scene of the session's experiments. */
ADVL_API advl_status advl_scene_generate(const advl_session* session,
                                         int index, advl_cloud** out);

/* Obstacles as JSON lines; decision receives 0 for PROCEED, 1 for STOP. */
ADVL_API advl_status advl_perceive(const advl_session* session,
                                   const advl_cloud* cloud,
                                   char** obstacles_jsonl, int* decision);

/* Writes a library trace (cloud plus .meta.json sidecar) to out_path. */
ADVL_API advl_status advl_spoof_synth(const advl_session* session,
                                      int budget, uint64_t seed, int variant,
                                      const char* out_path);

/* Attacks `scene` (NULL: scene 0 of the session) with the trace at
 * trace_path (NULL: the library trace for the session budget). Writes
 * attack.json, trajectory.csv, adversarial_trace.csv and
 * adversarial_cloud.bin under out_dir. */
ADVL_API advl_status advl_attack(const advl_session* session,
                                 const advl_cloud* scene,
                                 const char* trace_path, const char* out_dir,
                                 int* success);

/* Each experiment writes its CSV files under out_dir and hands back the
 * main table. */
ADVL_API advl_status advl_exp_success(const advl_session* session,
                                      const char* out_dir, char** csv);
ADVL_API advl_status advl_exp_frame_robust(const advl_session* session,
                                           const char* out_dir, char** csv);
ADVL_API advl_status advl_exp_trace_robust(const advl_session* session,
                                           const char* out_dir, char** csv);
/* name is "emergency_brake" or "av_freezing". */
ADVL_API advl_status advl_scenario(const advl_session* session,
                                   const char* name, int apply_attack,
                                   const char* out_dir, char** csv);

/* Quick end-to-end checks; report lists one line per check. */
ADVL_API advl_status advl_selftest(char** report);

#ifdef __cplusplus
}
#endif
