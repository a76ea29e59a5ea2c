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

#include <chrono>
#include <cstdio>
#include <thread>

#include "simrender/error.hpp"
#include "simrender/frame_loop.hpp"

namespace simrender {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

}  // namespace

std::size_t DeletionQueue::flush() {
  const std::size_t n = finalizers_.size();
  for (auto it = finalizers_.rbegin(); it != finalizers_.rend(); ++it) (*it)();
  finalizers_.clear();
  return n;
}

std::string timing_csv_row(const FrameTiming& t) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%llu,%.6f,%.6f,%.6f,%.6f", static_cast<unsigned long long>(t.frame),
                t.tlas_build_ms, t.main_pass_ms, t.post_process_ms, t.overlay_ms);
  return buf;
}

Renderer::Renderer(Scene scene, RenderConfig config) : scene_(std::move(scene)), config_(std::move(config)) {
  validate_config(config_);
  validate_scene(scene_);
  update_world_transforms(scene_);
  select_camera(scene_, config_);
  arena_ = pack_vertex_arena(scene_);
  blases_.reserve(scene_.geometries.size());
  for (std::uint32_t g = 0; g < scene_.geometries.size(); ++g)
    blases_.push_back(compact_blas(build_blas(scene_.geometries[g], g)));
  defer(main_queue_, [this] {
    blases_.clear();
    blases_.shrink_to_fit();
  });
  defer(main_queue_, [this] { arena_ = VertexArena{}; });
}

Renderer::~Renderer() { shutdown(); }

void Renderer::defer(DeletionQueue& queue, std::function<void()> finalizer) {
  ++registered_;
  queue.push([ran = ran_, f = std::move(finalizer)] {
    f();
    ++*ran;
  });
}

void Renderer::shutdown() {
  if (shut_down_) return;
  shut_down_ = true;
  for (auto& slot : slots_) slot.deletion.flush();
  main_queue_.flush();
}

const Tlas& Renderer::tlas() const { return slots_[current_slot()].tlas; }

const LdrImage& Renderer::render_frame(PoseSource* poses) {
  if (shut_down_) throw Error(ErrorCode::kConfig, "renderer already shut down");
  const auto frame_start = Clock::now();
  const std::uint64_t frame = frame_;
  FrameSlot& slot = slots_[frame % kFrameSlots];
  slot.deletion.flush();

  if (poses) {
    TransformSnapshot snapshot;
    switch (poses->poll(snapshot)) {
      case PoseStatus::kOk: {
        const ApplyStats stats = apply_transform_table(scene_, snapshot);
        unmatched_ = stats.unmatched;
        last_generation_ = snapshot.generation;
        break;
      }
      case PoseStatus::kDetached:
        if (!detached_) ++pose_warnings_;
        detached_ = true;
        break;
      case PoseStatus::kNoData:
        break;
    }
  }

  FrameTiming timing;
  timing.frame = frame;

  auto t0 = Clock::now();
  slot.tlas = build_tlas(blases_, collect_instances(scene_), frame);
  defer(slot.deletion, [&slot] {
    slot.tlas.nodes.clear();
    slot.tlas.instances.clear();
  });
  timing.tlas_build_ms = ms_since(t0);

  t0 = Clock::now();
  const auto draws = build_draw_list(scene_);
  main_pass(scene_, config_.shadows ? &slot.tlas : nullptr, arena_, draws, config_, slot.hdr);
  timing.main_pass_ms = ms_since(t0);

  t0 = Clock::now();
  resolve_msaa(slot.hdr, slot.resolved);
  if (config_.fxaa)
    fxaa_pass(slot.resolved, slot.image);
  else
    slot.image = slot.resolved;
  timing.post_process_ms = ms_since(t0);

  t0 = Clock::now();
  if (config_.overlay) {
    const Vec3 cam = camera_setup(scene_, config_).position;
    overlay_pass(slot.image, {frame, previous_frame_ms_, cam});
  }
  timing.overlay_ms = ms_since(t0);

  timing_ = timing;
  ++frame_;

  if (config_.target_hz > 0.0) {
    const auto period = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(1.0 / config_.target_hz));
    std::this_thread::sleep_until(frame_start + period);
  }
  previous_frame_ms_ = ms_since(frame_start);
  return slot.image;
}

FrameLoopResult run_frame_loop(const Scene& scene, const RenderConfig& config, const FrameLoopOptions& options) {
  FrameLoopResult result;
  Renderer renderer(scene, config);
  result.timings.reserve(options.frames);
  for (std::uint64_t f = 0; f < options.frames; ++f) {
    const LdrImage& image = renderer.render_frame(options.poses);
    if (options.on_frame) options.on_frame(f, image, renderer);
    result.timings.push_back(renderer.last_timing());
  }
  renderer.shutdown();
  result.pose_warnings = renderer.pose_warnings();
  result.finalizers_registered = renderer.finalizers_registered();
  result.finalizers_run = renderer.finalizers_run();
  return result;
}

LdrImage render_single_frame(const Scene& scene, const RenderConfig& config) {
  RenderConfig c = config;
  c.target_hz = 0.0;
  Renderer renderer(scene, c);
  return renderer.render_frame();
}

std::filesystem::path frame_path(const std::string& pattern, std::uint64_t frame) {
  const auto pos = pattern.find("{frame}");
  if (pos == std::string::npos) return pattern;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04llu", static_cast<unsigned long long>(frame));
  return pattern.substr(0, pos) + buf + pattern.substr(pos + 7);
}

}  // namespace simrender
