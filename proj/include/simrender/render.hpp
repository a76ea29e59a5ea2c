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

// Main-pass building blocks: sorted draw list, the scene-wide vertex arena,
// the multisampled HDR framebuffer, the software rasterizer, and the MSAA
// resolve into an 8-bit display image.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "simrender/accel.hpp"
#include "simrender/math.hpp"
#include "simrender/scene.hpp"

namespace simrender {

struct RenderConfig {
  int width = 256;
  int height = 256;
  int msaa = 4;  // 1, 2, 4 or 8
  bool fxaa = true;
  bool shadows = true;
  bool overlay = false;
  std::optional<Rgb> clear_color;  // falls back to the scene's clear colour
  double target_hz = 0.0;          // 0 = unpaced
  bool frustum_culling = false;
  bool backface_culling = false;
  bool vertex_pulling = true;      // false: fetch from per-geometry arrays
  unsigned workers = 0;            // 0 = hardware concurrency
  std::string camera;              // camera or camera-node name; empty = first camera
  bool record_sample_ids = false;  // keep per-sample draw ids (tests, debugging)
};

/// Throws kConfig for out-of-range settings.
void validate_config(const RenderConfig& config);

struct DrawCommand {
  std::uint32_t material_id = 0;
  std::uint32_t segment_id = 0;  // vertex-arena segment (== geometry id)
  std::string node_name;
  std::uint32_t node = 0;
  std::uint32_t geometry = 0;
  Mat4 world;
};

/// One command per mesh-bearing node, sorted by (material, segment, node name).
std::vector<DrawCommand> build_draw_list(const Scene& scene);
std::size_t count_material_switches(std::span<const DrawCommand> draws);

struct VertexArena {
  std::vector<Vertex> vertices;
  std::vector<std::uint32_t> base;   // per geometry id
  std::vector<std::uint32_t> count;  // per geometry id
};

VertexArena pack_vertex_arena(const Scene& scene);

struct SamplePos {
  double x, y;  // offset inside the pixel, [0,1)
};

/// Fixed sample tables for 1, 2, 4 and 8 samples per pixel.
std::span<const SamplePos> sample_pattern(int samples);

class HdrFramebuffer {
 public:
  HdrFramebuffer() = default;
  HdrFramebuffer(int width, int height, int samples, bool with_ids = false);

  int width() const { return width_; }
  int height() const { return height_; }
  int samples() const { return samples_; }
  bool has_ids() const { return !ids_.empty(); }

  std::size_t index(int x, int y, int s) const {
    return (static_cast<std::size_t>(y) * width_ + x) * samples_ + s;
  }
  Rgb color(int x, int y, int s) const;
  void set_color(std::size_t i, Rgb c);
  float depth(int x, int y, int s) const { return depth_[index(x, y, s)]; }
  std::int32_t sample_id(int x, int y, int s) const { return ids_.empty() ? -1 : ids_[index(x, y, s)]; }

  void clear(Rgb display_color);

  std::vector<float>& raw_color() { return color_; }
  std::vector<float>& raw_depth() { return depth_; }
  std::vector<std::int32_t>& raw_ids() { return ids_; }
  const std::vector<float>& raw_color() const { return color_; }

 private:
  int width_ = 0, height_ = 0, samples_ = 1;
  std::vector<float> color_;  // 3 floats per sample, display-referred
  std::vector<float> depth_;  // +inf when clear
  std::vector<std::int32_t> ids_;
};

struct LdrImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

  LdrImage() = default;
  LdrImage(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, 0) {}
  std::uint8_t* pixel(int x, int y) { return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
  const std::uint8_t* pixel(int x, int y) const { return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
  friend bool operator==(const LdrImage&, const LdrImage&) = default;
};

struct CameraSetup {
  Mat4 view;
  Mat4 projection;
  Vec3 position;
};

/// Resolves the configured camera. Throws kConfig when the scene has none.
const Camera& select_camera(const Scene& scene, const RenderConfig& config);
/// Right-handed view, perspective projection with depth range [0, 1].
CameraSetup camera_setup(const Scene& scene, const RenderConfig& config);
Mat4 perspective(double vertical_fov, double aspect, double znear, double zfar);

/// Rasterizes, shades, tone maps and gamma encodes every draw into `fb`.
/// `fb` is reallocated only when its shape differs from the config.
void main_pass(const Scene& scene, const Tlas* tlas, const VertexArena& arena, std::span<const DrawCommand> draws,
               const RenderConfig& config, HdrFramebuffer& fb);
HdrFramebuffer main_pass(const Scene& scene, const Tlas* tlas, const VertexArena& arena,
                         std::span<const DrawCommand> draws, const RenderConfig& config);

/// Mean of the samples, quantized round-half-up to 8 bits.
void resolve_msaa(const HdrFramebuffer& fb, LdrImage& out);
LdrImage resolve_msaa(const HdrFramebuffer& fb);

std::uint8_t quantize_unorm8(double v);

}  // namespace simrender
