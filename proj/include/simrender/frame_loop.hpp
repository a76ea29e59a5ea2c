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

#pragma once

// The frame loop: two recycled frame slots, three deletion queues, per-stage
// timing, optional pose input and frame pacing.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <vector>

#include "simrender/accel.hpp"
#include "simrender/post.hpp"
#include "simrender/render.hpp"
#include "simrender/scene.hpp"

namespace simrender {

inline constexpr int kFrameSlots = 2;

/// Ordered list of finalizers; flush runs them newest first.
class DeletionQueue {
 public:
  void push(std::function<void()> finalizer) { finalizers_.push_back(std::move(finalizer)); }
  std::size_t flush();
  std::size_t size() const { return finalizers_.size(); }

 private:
  std::vector<std::function<void()>> finalizers_;
};

struct FrameTiming {
  std::uint64_t frame = 0;
  double tlas_build_ms = 0.0;
  double main_pass_ms = 0.0;  // draw list + main pass
  double post_process_ms = 0.0;  // resolve + FXAA
  double overlay_ms = 0.0;
};

inline constexpr const char* kTimingCsvHeader = "frame,tlas_build_ms,main_pass_ms,post_process_ms,overlay_ms";
std::string timing_csv_row(const FrameTiming& t);

enum class PoseStatus { kOk, kNoData, kDetached };

/// Supplies transform snapshots to the loop (the shared-memory reader in practice).
class PoseSource {
 public:
  virtual ~PoseSource() = default;
  virtual PoseStatus poll(TransformSnapshot& out) = 0;
};

struct FrameSlot {
  HdrFramebuffer hdr;
  LdrImage resolved;
  LdrImage image;
  Tlas tlas;
  DeletionQueue deletion;
};

class Renderer {
 public:
  Renderer(Scene scene, RenderConfig config);
  ~Renderer();
  Renderer(const Renderer&) = delete;
  Renderer& operator=(const Renderer&) = delete;

  /// Runs one frame and returns the slot image (valid until the slot is reused).
  const LdrImage& render_frame(PoseSource* poses = nullptr);
  /// Flushes every queue; further frames are an error.
  void shutdown();

  std::uint64_t frame_index() const { return frame_; }
  int current_slot() const { return static_cast<int>((frame_ == 0 ? 0 : frame_ - 1) % kFrameSlots); }
  const FrameTiming& last_timing() const { return timing_; }
  const Scene& scene() const { return scene_; }
  Scene& scene() { return scene_; }
  const RenderConfig& config() const { return config_; }
  const std::vector<Blas>& blases() const { return blases_; }
  const Tlas& tlas() const;

  DeletionQueue& main_queue() { return main_queue_; }
  /// Queue of the slot used by the frame in progress (or about to start).
  DeletionQueue& frame_queue(int slot) { return slots_[slot].deletion; }
  std::size_t finalizers_registered() const { return registered_; }
  std::size_t finalizers_run() const { return *ran_; }
  std::size_t pose_warnings() const { return pose_warnings_; }
  std::uint64_t last_generation() const { return last_generation_; }
  std::size_t unmatched_names() const { return unmatched_; }

  /// Registers a counted finalizer on the given queue.
  void defer(DeletionQueue& queue, std::function<void()> finalizer);

 private:
  Scene scene_;
  RenderConfig config_;
  VertexArena arena_;
  std::vector<Blas> blases_;
  FrameSlot slots_[kFrameSlots];
  DeletionQueue main_queue_;
  FrameTiming timing_;
  std::uint64_t frame_ = 0;
  std::size_t registered_ = 0;
  std::shared_ptr<std::size_t> ran_ = std::make_shared<std::size_t>(0);
  std::size_t pose_warnings_ = 0;
  bool detached_ = false;
  bool shut_down_ = false;
  std::uint64_t last_generation_ = 0;
  std::size_t unmatched_ = 0;
  double previous_frame_ms_ = 0.0;
};

struct FrameLoopOptions {
  std::uint64_t frames = 1;
  PoseSource* poses = nullptr;
  /// Called with every finished frame (image writing, tests).
  std::function<void(std::uint64_t frame, const LdrImage& image, const Renderer& renderer)> on_frame;
};

struct FrameLoopResult {
  std::vector<FrameTiming> timings;
  std::size_t pose_warnings = 0;
  std::size_t finalizers_registered = 0;
  std::size_t finalizers_run = 0;
};

FrameLoopResult run_frame_loop(const Scene& scene, const RenderConfig& config, const FrameLoopOptions& options);

/// Convenience: one frame, no poses, no pacing.
LdrImage render_single_frame(const Scene& scene, const RenderConfig& config);

/// "frame_0007.ppm" style: replaces the first "{frame}" (zero padded to 4) in `pattern`.
std::filesystem::path frame_path(const std::string& pattern, std::uint64_t frame);

}  // namespace simrender
