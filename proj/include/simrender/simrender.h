/*
 * Copyright (c) 2026, The simrender Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef SIMRENDER_SIMRENDER_H_
#define SIMRENDER_SIMRENDER_H_

/* C interface to the simrender library. All objects are opaque handles;
 * every fallible call returns an sr_status and leaves a message retrievable
 * with sr_last_error() on the calling thread. */

#include <stddef.h>
#include <stdint.h>

#if defined(SIMRENDER_BUILDING_LIBRARY)
#define SR_API __attribute__((visibility("default")))
#else
#define SR_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sr_status {
  SR_OK = 0,
  SR_ERR_PARSE = 1,
  SR_ERR_UNSUPPORTED = 2,
  SR_ERR_VALIDATION = 3,
  SR_ERR_STRUCTURAL = 4,
  SR_ERR_CONFIG = 5,
  SR_ERR_IO = 6,
  SR_ERR_INCOMPATIBLE_REGION = 7,
  SR_ERR_CONTENTION = 8,
  SR_ERR_USAGE = 9,
  SR_ERR_INVALID_ARGUMENT = 10,
  SR_ERR_INTERNAL = 11
} sr_status;

typedef struct sr_scene sr_scene;
typedef struct sr_renderer sr_renderer;
typedef struct sr_table_writer sr_table_writer;
typedef struct sr_table_reader sr_table_reader;
typedef struct sr_pose_source sr_pose_source;

SR_API const char* sr_last_error(void);
SR_API const char* sr_status_name(sr_status status);
SR_API void sr_string_free(char* s);

/* Scenes */
SR_API sr_status sr_scene_load(const char* path, sr_scene** out);
SR_API sr_status sr_scene_parse(const char* json, size_t length, const char* base_dir, sr_scene** out);
SR_API void sr_scene_free(sr_scene* scene);
SR_API size_t sr_scene_triangle_count(const sr_scene* scene);
SR_API size_t sr_scene_mesh_node_count(const sr_scene* scene);
/* Name of the i-th mesh-bearing node (node order); NULL when out of range. */
SR_API const char* sr_scene_mesh_node_name(const sr_scene* scene, size_t index);
/* JSON dump of the scene; release with sr_string_free. */
SR_API sr_status sr_scene_dump(const sr_scene* scene, char** out);
/* Text dump of the BVH built for one geometry (compacted when requested). */
SR_API sr_status sr_scene_bvh_dump(const sr_scene* scene, uint32_t geometry, int compacted, char** out);

/* Rendering */
typedef struct sr_render_config {
  int width;
  int height;
  int msaa; /* 1, 2, 4 or 8 */
  int fxaa;
  int shadows;
  int overlay;
  int has_clear_color;
  double clear_color[3]; /* linear RGB */
  double target_hz;      /* 0 = unpaced */
  int frustum_culling;
  int backface_culling;
  unsigned workers; /* 0 = hardware concurrency */
  const char* camera; /* NULL or "" = first camera */
} sr_render_config;

typedef struct sr_frame_info {
  uint64_t frame;
  double tlas_build_ms;
  double main_pass_ms;
  double post_process_ms;
  double overlay_ms;
  uint64_t pose_generation; /* last applied table generation, 0 = none */
  size_t pose_warnings;
  size_t unmatched_names;
} sr_frame_info;

SR_API void sr_render_config_default(sr_render_config* config);
SR_API sr_status sr_renderer_create(const sr_scene* scene, const sr_render_config* config, sr_renderer** out);
/* Flushes every deletion queue and releases the renderer. */
SR_API void sr_renderer_destroy(sr_renderer* renderer);
/* Renders one frame. `poses` may be NULL. `info` may be NULL. */
SR_API sr_status sr_renderer_render_frame(sr_renderer* renderer, sr_pose_source* poses, sr_frame_info* info);
/* Last frame's image; the pointer stays valid until the next render call. */
SR_API sr_status sr_renderer_image(const sr_renderer* renderer, int* width, int* height, const uint8_t** rgb);
/* PPM unless the path ends in .png. */
SR_API sr_status sr_renderer_write_image(const sr_renderer* renderer, const char* path);
SR_API sr_status sr_renderer_camera_position(const sr_renderer* renderer, double out[3]);
SR_API sr_status sr_renderer_shutdown(sr_renderer* renderer, size_t* registered, size_t* ran);

/* "frame,tlas_build_ms,main_pass_ms,post_process_ms,overlay_ms" */
SR_API const char* sr_timing_csv_header(void);
SR_API size_t sr_timing_csv_row(const sr_frame_info* info, char* buf, size_t capacity);

/* Benchmark */
typedef struct sr_bench_options {
  unsigned doublings;
  unsigned frames;
  unsigned warmup;
  sr_render_config config;
} sr_bench_options;

typedef struct sr_bench_row {
  unsigned doublings;
  size_t triangles;
  double tlas_mean_ms, tlas_std;
  double main_mean_ms, main_std;
  double post_mean_ms, post_std;
  double overlay_mean_ms, overlay_std;
} sr_bench_row;

typedef void (*sr_bench_row_fn)(const sr_bench_row* row, void* user);

SR_API void sr_bench_options_default(sr_bench_options* options);
SR_API sr_status sr_bench_run(const sr_scene* scene, const sr_bench_options* options, sr_bench_row_fn on_row,
                              void* user);
SR_API const char* sr_bench_csv_header(void);
SR_API size_t sr_bench_csv_row(const sr_bench_row* row, char* buf, size_t capacity);

/* Shared-memory transform table */
SR_API size_t sr_table_region_size(size_t node_count);
SR_API sr_status sr_table_create(const char* region, const char* const* names, size_t count, int reclaim,
                                 sr_table_writer** out);
/* `matrices` holds 16 column-major values per name. */
SR_API sr_status sr_table_write(sr_table_writer* writer, const char* const* names, const double* matrices,
                                size_t count);
SR_API sr_status sr_table_write_stub(sr_table_writer* writer, uint64_t tick);
SR_API uint64_t sr_table_writer_generation(const sr_table_writer* writer);
/* Unmaps and unlinks the region. */
SR_API void sr_table_destroy(sr_table_writer* writer);
SR_API int sr_table_unlink(const char* region);

SR_API sr_status sr_table_attach(const char* region, sr_table_reader** out);
SR_API void sr_table_detach(sr_table_reader* reader);
/* Copies one consistent snapshot: generation plus up to `capacity`
 * matrices (16 doubles each) in table order. */
SR_API sr_status sr_table_read(sr_table_reader* reader, uint64_t* generation, double* matrices, size_t capacity,
                               size_t* count);

/* Pose source over a reader (ownership moves to the source). `writer_alive`
 * is optional; once it returns 0 the source stays detached. */
typedef int (*sr_alive_fn)(void* user);
SR_API sr_status sr_pose_source_create(sr_table_reader* reader, sr_alive_fn writer_alive, void* user,
                                       sr_pose_source** out);
SR_API void sr_pose_source_free(sr_pose_source* source);

/* Physics stub: node i of `names` gets Translate(i,0,0) * RotateZ(0.1 t + i).
 * Runs until sr_physics_stub_request_stop() (async-signal-safe) or max_ticks. */
typedef struct sr_stub_options {
  const char* region;
  const char* const* names;
  size_t count;
  double tick_hz;
  uint64_t max_ticks;
  int reclaim;
} sr_stub_options;

SR_API sr_status sr_physics_stub_run(const sr_stub_options* options);
SR_API void sr_physics_stub_request_stop(void);

#ifdef __cplusplus
}
#endif

#endif /* SIMRENDER_SIMRENDER_H_ */
