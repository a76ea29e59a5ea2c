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

#include "simrender/simrender.h"

#include <atomic>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "simrender/bench.hpp"
#include "simrender/error.hpp"
#include "simrender/frame_loop.hpp"
#include "simrender/interchange.hpp"
#include "simrender/scene.hpp"

using namespace simrender;

struct sr_scene {
  Scene scene;
  std::vector<std::string> roster;
};

struct sr_renderer {
  std::unique_ptr<Renderer> renderer;
  const LdrImage* image = nullptr;
  bool shut_down = false;
};

struct sr_table_writer {
  TableWriter writer;
};

struct sr_table_reader {
  TableReader reader;
};

struct sr_pose_source {
  std::unique_ptr<TablePoseSource> source;
};

namespace {

thread_local std::string g_last_error;
std::atomic<bool> g_stub_stop{false};

sr_status fail(sr_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

template <typename F>
sr_status guarded(F&& body) {
  try {
    g_last_error.clear();
    body();
    return SR_OK;
  } catch (const Error& e) {
    return fail(static_cast<sr_status>(static_cast<int>(e.code())), e.what());
  } catch (const std::bad_alloc&) {
    return fail(SR_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SR_ERR_INTERNAL, e.what());
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

RenderConfig to_config(const sr_render_config& c) {
  RenderConfig r;
  r.width = c.width;
  r.height = c.height;
  r.msaa = c.msaa;
  r.fxaa = c.fxaa != 0;
  r.shadows = c.shadows != 0;
  r.overlay = c.overlay != 0;
  if (c.has_clear_color) r.clear_color = Rgb{c.clear_color[0], c.clear_color[1], c.clear_color[2]};
  r.target_hz = c.target_hz;
  r.frustum_culling = c.frustum_culling != 0;
  r.backface_culling = c.backface_culling != 0;
  r.workers = c.workers;
  r.camera = c.camera ? c.camera : "";
  return r;
}

sr_bench_row to_row(const BenchRecord& r) {
  return {r.doublings,   r.triangles,       r.tlas.mean,   r.tlas.stddev, r.main.mean, r.main.stddev,
          r.post.mean,   r.post.stddev,     r.overlay.mean, r.overlay.stddev};
}

size_t copy_out(const std::string& s, char* buf, size_t capacity) {
  if (buf && capacity > 0) {
    const size_t n = std::min(capacity - 1, s.size());
    std::memcpy(buf, s.data(), n);
    buf[n] = '\0';
  }
  return s.size();
}

#define SR_REQUIRE(cond, what) \
  if (!(cond)) return fail(SR_ERR_INVALID_ARGUMENT, what)

}  // namespace

extern "C" {

const char* sr_last_error(void) { return g_last_error.c_str(); }

const char* sr_status_name(sr_status status) {
  switch (status) {
    case SR_OK: return "ok";
    case SR_ERR_PARSE: return "parse error";
    case SR_ERR_UNSUPPORTED: return "unsupported feature";
    case SR_ERR_VALIDATION: return "validation error";
    case SR_ERR_STRUCTURAL: return "structural error";
    case SR_ERR_CONFIG: return "configuration error";
    case SR_ERR_IO: return "i/o error";
    case SR_ERR_INCOMPATIBLE_REGION: return "incompatible region";
    case SR_ERR_CONTENTION: return "contention";
    case SR_ERR_USAGE: return "usage error";
    case SR_ERR_INVALID_ARGUMENT: return "invalid argument";
    case SR_ERR_INTERNAL: return "internal error";
  }
  return "unknown";
}

void sr_string_free(char* s) { std::free(s); }

sr_status sr_scene_load(const char* path, sr_scene** out) {
  SR_REQUIRE(path && out, "null argument");
  return guarded([&] {
    auto s = std::make_unique<sr_scene>();
    s->scene = load_gltf_file(path);
    s->roster = mesh_node_roster(s->scene);
    *out = s.release();
  });
}

sr_status sr_scene_parse(const char* json, size_t length, const char* base_dir, sr_scene** out) {
  SR_REQUIRE(json && out, "null argument");
  return guarded([&] {
    auto s = std::make_unique<sr_scene>();
    s->scene = parse_gltf_subset(std::string_view(json, length), base_dir ? base_dir : "");
    s->roster = mesh_node_roster(s->scene);
    *out = s.release();
  });
}

void sr_scene_free(sr_scene* scene) { delete scene; }

size_t sr_scene_triangle_count(const sr_scene* scene) { return scene ? scene->scene.triangle_count() : 0; }

size_t sr_scene_mesh_node_count(const sr_scene* scene) { return scene ? scene->roster.size() : 0; }

const char* sr_scene_mesh_node_name(const sr_scene* scene, size_t index) {
  if (!scene || index >= scene->roster.size()) return nullptr;
  return scene->roster[index].c_str();
}

sr_status sr_scene_dump(const sr_scene* scene, char** out) {
  SR_REQUIRE(scene && out, "null argument");
  return guarded([&] { *out = dup_string(dump_scene(scene->scene)); });
}

sr_status sr_scene_bvh_dump(const sr_scene* scene, uint32_t geometry, int compacted, char** out) {
  SR_REQUIRE(scene && out, "null argument");
  if (geometry >= scene->scene.geometries.size())
    return fail(SR_ERR_INVALID_ARGUMENT, "geometry " + std::to_string(geometry) + " does not exist");
  return guarded([&] {
    Blas blas = build_blas(scene->scene.geometries[geometry], geometry);
    if (compacted) blas = compact_blas(std::move(blas));
    *out = dup_string(dump_bvh(blas.nodes));
  });
}

void sr_render_config_default(sr_render_config* config) {
  if (!config) return;
  const RenderConfig d;
  *config = sr_render_config{};
  config->width = d.width;
  config->height = d.height;
  config->msaa = d.msaa;
  config->fxaa = d.fxaa;
  config->shadows = d.shadows;
  config->overlay = d.overlay;
  config->target_hz = d.target_hz;
  config->frustum_culling = d.frustum_culling;
  config->backface_culling = d.backface_culling;
  config->workers = d.workers;
  config->camera = nullptr;
}

sr_status sr_renderer_create(const sr_scene* scene, const sr_render_config* config, sr_renderer** out) {
  SR_REQUIRE(scene && config && out, "null argument");
  return guarded([&] {
    auto r = std::make_unique<sr_renderer>();
    r->renderer = std::make_unique<Renderer>(scene->scene, to_config(*config));
    *out = r.release();
  });
}

void sr_renderer_destroy(sr_renderer* renderer) { delete renderer; }

sr_status sr_renderer_render_frame(sr_renderer* renderer, sr_pose_source* poses, sr_frame_info* info) {
  SR_REQUIRE(renderer, "null renderer");
  return guarded([&] {
    renderer->image = &renderer->renderer->render_frame(poses ? poses->source.get() : nullptr);
    if (info) {
      const auto& r = *renderer->renderer;
      const auto& t = r.last_timing();
      *info = {t.frame, t.tlas_build_ms, t.main_pass_ms, t.post_process_ms, t.overlay_ms,
               r.last_generation(), r.pose_warnings(), r.unmatched_names()};
    }
  });
}

sr_status sr_renderer_image(const sr_renderer* renderer, int* width, int* height, const uint8_t** rgb) {
  SR_REQUIRE(renderer && width && height && rgb, "null argument");
  if (!renderer->image) return fail(SR_ERR_CONFIG, "no frame has been rendered");
  *width = renderer->image->width;
  *height = renderer->image->height;
  *rgb = renderer->image->rgb.data();
  return SR_OK;
}

sr_status sr_renderer_write_image(const sr_renderer* renderer, const char* path) {
  SR_REQUIRE(renderer && path, "null argument");
  if (!renderer->image) return fail(SR_ERR_CONFIG, "no frame has been rendered");
  return guarded([&] { write_image(*renderer->image, path); });
}

sr_status sr_renderer_camera_position(const sr_renderer* renderer, double out[3]) {
  SR_REQUIRE(renderer && out, "null argument");
  return guarded([&] {
    const auto& r = *renderer->renderer;
    const Vec3 p = camera_setup(r.scene(), r.config()).position;
    out[0] = p.x;
    out[1] = p.y;
    out[2] = p.z;
  });
}

sr_status sr_renderer_shutdown(sr_renderer* renderer, size_t* registered, size_t* ran) {
  SR_REQUIRE(renderer, "null renderer");
  return guarded([&] {
    renderer->renderer->shutdown();
    renderer->image = nullptr;
    if (registered) *registered = renderer->renderer->finalizers_registered();
    if (ran) *ran = renderer->renderer->finalizers_run();
  });
}

const char* sr_timing_csv_header(void) { return kTimingCsvHeader; }

size_t sr_timing_csv_row(const sr_frame_info* info, char* buf, size_t capacity) {
  if (!info) return 0;
  FrameTiming t{info->frame, info->tlas_build_ms, info->main_pass_ms, info->post_process_ms, info->overlay_ms};
  return copy_out(timing_csv_row(t), buf, capacity);
}

void sr_bench_options_default(sr_bench_options* options) {
  if (!options) return;
  const BenchOptions d;
  options->doublings = d.doublings;
  options->frames = d.frames;
  options->warmup = d.warmup;
  sr_render_config_default(&options->config);
  options->config.overlay = d.config.overlay;
}

sr_status sr_bench_run(const sr_scene* scene, const sr_bench_options* options, sr_bench_row_fn on_row, void* user) {
  SR_REQUIRE(scene && options, "null argument");
  return guarded([&] {
    BenchOptions o;
    o.doublings = options->doublings;
    o.frames = options->frames;
    o.warmup = options->warmup;
    o.config = to_config(options->config);
    run_bench(scene->scene, o, [&](const BenchRecord& r) {
      if (!on_row) return;
      const sr_bench_row row = to_row(r);
      on_row(&row, user);
    });
  });
}

const char* sr_bench_csv_header(void) { return kBenchCsvHeader; }

size_t sr_bench_csv_row(const sr_bench_row* row, char* buf, size_t capacity) {
  if (!row) return 0;
  BenchRecord r;
  r.doublings = row->doublings;
  r.triangles = row->triangles;
  r.tlas = {row->tlas_mean_ms, row->tlas_std};
  r.main = {row->main_mean_ms, row->main_std};
  r.post = {row->post_mean_ms, row->post_std};
  r.overlay = {row->overlay_mean_ms, row->overlay_std};
  return copy_out(bench_csv_row(r), buf, capacity);
}

size_t sr_table_region_size(size_t node_count) { return table_region_size(node_count); }

sr_status sr_table_create(const char* region, const char* const* names, size_t count, int reclaim,
                          sr_table_writer** out) {
  SR_REQUIRE(region && out && (names || count == 0), "null argument");
  return guarded([&] {
    std::vector<std::string> roster(names, names + count);
    *out = new sr_table_writer{TableWriter::create(region, roster, reclaim != 0)};
  });
}

sr_status sr_table_write(sr_table_writer* writer, const char* const* names, const double* matrices, size_t count) {
  SR_REQUIRE(writer && ((names && matrices) || count == 0), "null argument");
  return guarded([&] {
    std::vector<NamedTransform> transforms(count);
    for (size_t i = 0; i < count; ++i) {
      transforms[i].name = names[i];
      std::copy(matrices + 16 * i, matrices + 16 * (i + 1), transforms[i].world.m.begin());
    }
    writer->writer.write_frame(transforms);
  });
}

sr_status sr_table_write_stub(sr_table_writer* writer, uint64_t tick) {
  SR_REQUIRE(writer, "null writer");
  return guarded([&] { writer->writer.write_frame(physics_stub_step(tick, writer->writer.roster())); });
}

uint64_t sr_table_writer_generation(const sr_table_writer* writer) {
  return writer ? writer->writer.generation() : 0;
}

void sr_table_destroy(sr_table_writer* writer) { delete writer; }

int sr_table_unlink(const char* region) {
  try {
    return region && unlink_region(region) ? 1 : 0;
  } catch (const Error&) {
    return 0;
  }
}

sr_status sr_table_attach(const char* region, sr_table_reader** out) {
  SR_REQUIRE(region && out, "null argument");
  return guarded([&] { *out = new sr_table_reader{TableReader::attach(region)}; });
}

void sr_table_detach(sr_table_reader* reader) { delete reader; }

sr_status sr_table_read(sr_table_reader* reader, uint64_t* generation, double* matrices, size_t capacity,
                        size_t* count) {
  SR_REQUIRE(reader, "null reader");
  return guarded([&] {
    const TransformSnapshot snap = reader->reader.read_frame();
    if (generation) *generation = snap.generation;
    const size_t n = std::min(capacity, snap.transforms.size());
    for (size_t i = 0; i < n && matrices; ++i)
      std::copy(snap.transforms[i].world.m.begin(), snap.transforms[i].world.m.end(), matrices + 16 * i);
    if (count) *count = snap.transforms.size();
  });
}

sr_status sr_pose_source_create(sr_table_reader* reader, sr_alive_fn writer_alive, void* user,
                                sr_pose_source** out) {
  SR_REQUIRE(reader && out, "null argument");
  return guarded([&] {
    std::function<bool()> alive;
    if (writer_alive) alive = [writer_alive, user] { return writer_alive(user) != 0; };
    auto src = std::make_unique<sr_pose_source>();
    src->source = std::make_unique<TablePoseSource>(std::move(reader->reader), std::move(alive));
    delete reader;
    *out = src.release();
  });
}

void sr_pose_source_free(sr_pose_source* source) { delete source; }

sr_status sr_physics_stub_run(const sr_stub_options* options) {
  SR_REQUIRE(options && options->region && (options->names || options->count == 0), "null argument");
  if (!(options->tick_hz > 0.0)) return fail(SR_ERR_CONFIG, "tick rate must be positive");
  return guarded([&] {
    StubOptions o;
    o.region = options->region;
    o.roster.assign(options->names, options->names + options->count);
    o.tick_hz = options->tick_hz;
    o.max_ticks = options->max_ticks;
    o.reclaim = options->reclaim != 0;
    run_physics_stub(o, g_stub_stop);
  });
}

void sr_physics_stub_request_stop(void) { g_stub_stop.store(true); }

}  // extern "C"
