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

// Software main pass.
//
// Geometry stage: per draw, vertices are pulled from the arena, transformed to
// clip space, clipped against the near plane (and a wide guard band), and
// snapped to 1/256-pixel fixed point. Raster stage: the screen is split into
// 32x32 tiles, each owned by one worker, which walks the binned triangles in
// submission order. Coverage uses integer edge functions with a top-left fill
// rule; depth is tested per sample; shading runs once per (pixel, triangle)
// at the pixel centre and is broadcast to the covered samples.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "simrender/error.hpp"
#include "simrender/render.hpp"
#include "simrender/shading.hpp"

namespace simrender {

namespace {

constexpr int kSubpixelBits = 8;
constexpr std::int64_t kSubpixel = std::int64_t{1} << kSubpixelBits;
constexpr int kTileSize = 32;
constexpr double kGuardBand = 64.0;

constexpr std::array<SamplePos, 1> kPattern1{{{0.5, 0.5}}};
constexpr std::array<SamplePos, 2> kPattern2{{{0.75, 0.75}, {0.25, 0.25}}};
constexpr std::array<SamplePos, 4> kPattern4{{{0.375, 0.125}, {0.875, 0.375}, {0.125, 0.625}, {0.625, 0.875}}};
// Standard 8x positions, in 1/16 pixel units around the centre.
constexpr std::array<SamplePos, 8> kPattern8{{{0.5 + 1 / 16.0, 0.5 - 3 / 16.0},
                                              {0.5 - 1 / 16.0, 0.5 + 3 / 16.0},
                                              {0.5 + 5 / 16.0, 0.5 + 1 / 16.0},
                                              {0.5 - 3 / 16.0, 0.5 - 5 / 16.0},
                                              {0.5 - 5 / 16.0, 0.5 + 5 / 16.0},
                                              {0.5 - 7 / 16.0, 0.5 - 1 / 16.0},
                                              {0.5 + 3 / 16.0, 0.5 + 7 / 16.0},
                                              {0.5 + 7 / 16.0, 0.5 - 7 / 16.0}}};

struct ClipVertex {
  double x, y, z, w;
  Vec3 world;
  Vec3 normal;
};

ClipVertex lerp(const ClipVertex& a, const ClipVertex& b, double t) {
  return {a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t, a.z + (b.z - a.z) * t, a.w + (b.w - a.w) * t,
          a.world + (b.world - a.world) * t, a.normal + (b.normal - a.normal) * t};
}

// Sutherland-Hodgman against one plane given by a signed distance function.
template <typename Dist>
void clip_polygon(std::vector<ClipVertex>& poly, std::vector<ClipVertex>& scratch, Dist dist) {
  scratch.clear();
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const ClipVertex& a = poly[i];
    const ClipVertex& b = poly[(i + 1) % n];
    const double da = dist(a), db = dist(b);
    if (da >= 0.0) scratch.push_back(a);
    if ((da >= 0.0) != (db >= 0.0)) scratch.push_back(lerp(a, b, da / (da - db)));
  }
  poly.swap(scratch);
}

struct RasterTri {
  std::array<std::int64_t, 3> fx, fy;  // fixed-point screen coordinates
  std::array<double, 3> z, inv_w;
  std::array<Vec3, 3> world, normal;
  std::int64_t area2 = 0;
  std::int32_t draw = 0;
  std::uint32_t material = 0;
  int min_x = 0, max_x = 0, min_y = 0, max_y = 0;
};

// Edge k runs from vertex (k+1)%3 to (k+2)%3 and weights vertex k.
inline std::int64_t edge(const RasterTri& t, int k, std::int64_t px, std::int64_t py) {
  const int a = (k + 1) % 3, b = (k + 2) % 3;
  return (t.fx[b] - t.fx[a]) * (py - t.fy[a]) - (t.fy[b] - t.fy[a]) * (px - t.fx[a]);
}

// Top-left rule for positive-area (clockwise on a y-down screen) triangles.
inline bool owns_boundary(const RasterTri& t, int k) {
  const int a = (k + 1) % 3, b = (k + 2) % 3;
  const std::int64_t dx = t.fx[b] - t.fx[a], dy = t.fy[b] - t.fy[a];
  return dy < 0 || (dy == 0 && dx > 0);
}

inline bool inside(const RasterTri& t, std::int64_t px, std::int64_t py, std::array<std::int64_t, 3>& e) {
  for (int k = 0; k < 3; ++k) {
    e[k] = edge(t, k, px, py);
    if (e[k] < 0 || (e[k] == 0 && !owns_boundary(t, k))) return false;
  }
  return true;
}

struct GeometryStage {
  std::vector<RasterTri> tris;
};

GeometryStage run_geometry_stage(const Scene& scene, const VertexArena& arena, std::span<const DrawCommand> draws,
                                 const RenderConfig& config, const CameraSetup& cam) {
  GeometryStage out;
  const double w = config.width, h = config.height;
  const Mat4 view_proj = cam.projection * cam.view;
  std::vector<ClipVertex> verts, poly, scratch;

  for (std::size_t d = 0; d < draws.size(); ++d) {
    const auto& draw = draws[d];
    const Mat4 mvp = view_proj * draw.world;
    const Mat4 nmat = normal_matrix(draw.world);

    std::span<const Vertex> source;
    if (config.vertex_pulling) {
      source = std::span<const Vertex>(arena.vertices).subspan(arena.base[draw.segment_id], arena.count[draw.segment_id]);
    } else {
      source = scene.geometries[draw.geometry].vertices;
    }

    if (config.frustum_culling) {
      Aabb local;
      for (const auto& v : source) local.extend(v.position);
      bool culled = false;
      for (int plane = 0; plane < 6 && !culled; ++plane) {
        bool all_out = true;
        for (int c = 0; c < 8 && all_out; ++c) {
          const Vec3 p{(c & 1) ? local.max.x : local.min.x, (c & 2) ? local.max.y : local.min.y,
                       (c & 4) ? local.max.z : local.min.z};
          const double x = mvp.at(0, 0) * p.x + mvp.at(0, 1) * p.y + mvp.at(0, 2) * p.z + mvp.at(0, 3);
          const double y = mvp.at(1, 0) * p.x + mvp.at(1, 1) * p.y + mvp.at(1, 2) * p.z + mvp.at(1, 3);
          const double z = mvp.at(2, 0) * p.x + mvp.at(2, 1) * p.y + mvp.at(2, 2) * p.z + mvp.at(2, 3);
          const double cw = mvp.at(3, 0) * p.x + mvp.at(3, 1) * p.y + mvp.at(3, 2) * p.z + mvp.at(3, 3);
          const double dist[6] = {cw + x, cw - x, cw + y, cw - y, z, cw - z};
          all_out = dist[plane] < 0.0;
        }
        culled = all_out;
      }
      if (culled) continue;
    }

    // Vertex shader: one invocation per pulled vertex.
    verts.resize(source.size());
    for (std::size_t i = 0; i < source.size(); ++i) {
      const Vec3 p = source[i].position;
      auto& cv = verts[i];
      cv.x = mvp.at(0, 0) * p.x + mvp.at(0, 1) * p.y + mvp.at(0, 2) * p.z + mvp.at(0, 3);
      cv.y = mvp.at(1, 0) * p.x + mvp.at(1, 1) * p.y + mvp.at(1, 2) * p.z + mvp.at(1, 3);
      cv.z = mvp.at(2, 0) * p.x + mvp.at(2, 1) * p.y + mvp.at(2, 2) * p.z + mvp.at(2, 3);
      cv.w = mvp.at(3, 0) * p.x + mvp.at(3, 1) * p.y + mvp.at(3, 2) * p.z + mvp.at(3, 3);
      cv.world = transform_point(draw.world, p);
      cv.normal = transform_vector(nmat, source[i].normal);
    }

    const auto& triangles = scene.geometries[draw.geometry].triangles;
    for (const auto& tri : triangles) {
      const ClipVertex& a = verts[tri[0]];
      const ClipVertex& b = verts[tri[1]];
      const ClipVertex& c = verts[tri[2]];
      const bool needs_clip = a.z < 0.0 || b.z < 0.0 || c.z < 0.0 || std::abs(a.x) > kGuardBand * a.w ||
                              std::abs(b.x) > kGuardBand * b.w || std::abs(c.x) > kGuardBand * c.w ||
                              std::abs(a.y) > kGuardBand * a.w || std::abs(b.y) > kGuardBand * b.w ||
                              std::abs(c.y) > kGuardBand * c.w;
      poly.assign({a, b, c});
      if (needs_clip) {
        clip_polygon(poly, scratch, [](const ClipVertex& v) { return v.z; });
        clip_polygon(poly, scratch, [](const ClipVertex& v) { return kGuardBand * v.w - v.x; });
        clip_polygon(poly, scratch, [](const ClipVertex& v) { return kGuardBand * v.w + v.x; });
        clip_polygon(poly, scratch, [](const ClipVertex& v) { return kGuardBand * v.w - v.y; });
        clip_polygon(poly, scratch, [](const ClipVertex& v) { return kGuardBand * v.w + v.y; });
        if (poly.size() < 3) continue;
      }

      for (std::size_t f = 1; f + 1 < poly.size(); ++f) {
        const ClipVertex* fan[3] = {&poly[0], &poly[f], &poly[f + 1]};
        RasterTri rt;
        for (int k = 0; k < 3; ++k) {
          const ClipVertex& v = *fan[k];
          const double inv_w = 1.0 / v.w;
          const double sx = (v.x * inv_w + 1.0) * 0.5 * w;
          const double sy = (1.0 - v.y * inv_w) * 0.5 * h;
          rt.fx[k] = std::llround(sx * kSubpixel);
          rt.fy[k] = std::llround(sy * kSubpixel);
          rt.z[k] = v.z * inv_w;
          rt.inv_w[k] = inv_w;
          rt.world[k] = v.world;
          rt.normal[k] = v.normal;
        }
        rt.area2 = (rt.fx[1] - rt.fx[0]) * (rt.fy[2] - rt.fy[0]) - (rt.fy[1] - rt.fy[0]) * (rt.fx[2] - rt.fx[0]);
        if (rt.area2 == 0) continue;
        // Counter-clockwise (front-facing) triangles have negative area on the y-down screen.
        if (rt.area2 > 0 && config.backface_culling) continue;
        if (rt.area2 < 0) {
          std::swap(rt.fx[1], rt.fx[2]);
          std::swap(rt.fy[1], rt.fy[2]);
          std::swap(rt.z[1], rt.z[2]);
          std::swap(rt.inv_w[1], rt.inv_w[2]);
          std::swap(rt.world[1], rt.world[2]);
          std::swap(rt.normal[1], rt.normal[2]);
          rt.area2 = -rt.area2;
        }
        const auto [min_fx, max_fx] = std::minmax({rt.fx[0], rt.fx[1], rt.fx[2]});
        const auto [min_fy, max_fy] = std::minmax({rt.fy[0], rt.fy[1], rt.fy[2]});
        rt.min_x = std::max<std::int64_t>(0, min_fx >> kSubpixelBits);
        rt.max_x = static_cast<int>(std::min<std::int64_t>(config.width - 1, max_fx >> kSubpixelBits));
        rt.min_y = std::max<std::int64_t>(0, min_fy >> kSubpixelBits);
        rt.max_y = static_cast<int>(std::min<std::int64_t>(config.height - 1, max_fy >> kSubpixelBits));
        if (rt.min_x > rt.max_x || rt.min_y > rt.max_y) continue;
        rt.draw = static_cast<std::int32_t>(d);
        rt.material = scene.nodes[draw.node].mesh_instance->material;
        out.tris.push_back(rt);
      }
    }
  }
  return out;
}

struct ShadeContext {
  const Scene* scene;
  const Tlas* tlas;
  const RenderConfig* config;
  Vec3 camera_position;
};

Rgb shade_fragment(const ShadeContext& ctx, const RasterTri& t, std::int64_t cx, std::int64_t cy,
                   std::vector<LightVisibility>& lights) {
  double lambda[3];
  for (int k = 0; k < 3; ++k) lambda[k] = static_cast<double>(edge(t, k, cx, cy)) / static_cast<double>(t.area2);
  double weights[3];
  double sum = 0.0;
  for (int k = 0; k < 3; ++k) {
    weights[k] = lambda[k] * t.inv_w[k];
    sum += weights[k];
  }
  if (sum > 0.0) {
    for (double& wk : weights) wk /= sum;
  } else {
    for (int k = 0; k < 3; ++k) weights[k] = lambda[k];
  }
  Vec3 position, normal;
  for (int k = 0; k < 3; ++k) {
    position += t.world[k] * weights[k];
    normal += t.normal[k] * weights[k];
  }
  normal = normalize(normal);
  const Vec3 to_viewer = normalize(ctx.camera_position - position);
  if (dot(normal, to_viewer) < 0.0) normal = -normal;

  const auto& scene = *ctx.scene;
  lights.clear();
  for (const auto& light : scene.lights) {
    int visible = 1;
    if (ctx.config->shadows && ctx.tlas) visible = shadow_visibility(*ctx.tlas, position, normal, light.position);
    lights.push_back({light, visible});
  }
  ShadingSample sample{position, normal, scene.materials[t.material], to_viewer};
  return to_display(shade_direct(sample, lights));
}

void raster_tile(const ShadeContext& ctx, const std::vector<RasterTri>& tris, std::span<const std::uint32_t> bin,
                 int tx0, int ty0, int tx1, int ty1, std::span<const SamplePos> pattern, HdrFramebuffer& fb) {
  const int samples = static_cast<int>(pattern.size());
  std::array<std::int64_t, 8> sox{}, soy{};
  for (int s = 0; s < samples; ++s) {
    sox[s] = static_cast<std::int64_t>(pattern[s].x * kSubpixel);
    soy[s] = static_cast<std::int64_t>(pattern[s].y * kSubpixel);
  }
  auto& color = fb.raw_color();
  auto& depth = fb.raw_depth();
  auto& ids = fb.raw_ids();
  const bool with_ids = !ids.empty();
  std::vector<LightVisibility> lights;
  std::array<std::int64_t, 3> e{};
  std::array<std::size_t, 8> covered_index{};
  std::array<float, 8> covered_depth{};

  for (const std::uint32_t ti : bin) {
    const RasterTri& t = tris[ti];
    const int x0 = std::max(t.min_x, tx0), x1 = std::min(t.max_x, tx1 - 1);
    const int y0 = std::max(t.min_y, ty0), y1 = std::min(t.max_y, ty1 - 1);
    const double inv_area = 1.0 / static_cast<double>(t.area2);
    for (int py = y0; py <= y1; ++py) {
      for (int px = x0; px <= x1; ++px) {
        int covered = 0;
        const std::int64_t bx = static_cast<std::int64_t>(px) << kSubpixelBits;
        const std::int64_t by = static_cast<std::int64_t>(py) << kSubpixelBits;
        for (int s = 0; s < samples; ++s) {
          if (!inside(t, bx + sox[s], by + soy[s], e)) continue;
          const double z = (e[0] * t.z[0] + e[1] * t.z[1] + e[2] * t.z[2]) * inv_area;
          const auto zf = static_cast<float>(z);
          if (!(zf >= 0.0f && zf <= 1.0f)) continue;
          const std::size_t idx = fb.index(px, py, s);
          if (!(zf < depth[idx])) continue;
          covered_index[covered] = idx;
          covered_depth[covered] = zf;
          ++covered;
        }
        if (covered == 0) continue;
        const Rgb c = shade_fragment(ctx, t, bx + kSubpixel / 2, by + kSubpixel / 2, lights);
        const float cr = static_cast<float>(c.r), cg = static_cast<float>(c.g), cb = static_cast<float>(c.b);
        for (int i = 0; i < covered; ++i) {
          const std::size_t idx = covered_index[i];
          depth[idx] = covered_depth[i];
          color[idx * 3 + 0] = cr;
          color[idx * 3 + 1] = cg;
          color[idx * 3 + 2] = cb;
          if (with_ids) ids[idx] = t.draw;
        }
      }
    }
  }
}

}  // namespace

std::span<const SamplePos> sample_pattern(int samples) {
  switch (samples) {
    case 1: return kPattern1;
    case 2: return kPattern2;
    case 4: return kPattern4;
    case 8: return kPattern8;
    default: throw Error(ErrorCode::kConfig, "unsupported sample count " + std::to_string(samples));
  }
}

HdrFramebuffer::HdrFramebuffer(int width, int height, int samples, bool with_ids)
    : width_(width), height_(height), samples_(samples) {
  const std::size_t n = static_cast<std::size_t>(width) * height * samples;
  color_.assign(n * 3, 0.0f);
  depth_.assign(n, std::numeric_limits<float>::infinity());
  if (with_ids) ids_.assign(n, -1);
}

Rgb HdrFramebuffer::color(int x, int y, int s) const {
  const std::size_t i = index(x, y, s) * 3;
  return {color_[i], color_[i + 1], color_[i + 2]};
}

void HdrFramebuffer::set_color(std::size_t i, Rgb c) {
  color_[i * 3] = static_cast<float>(c.r);
  color_[i * 3 + 1] = static_cast<float>(c.g);
  color_[i * 3 + 2] = static_cast<float>(c.b);
}

void HdrFramebuffer::clear(Rgb display_color) {
  const auto r = static_cast<float>(display_color.r), g = static_cast<float>(display_color.g),
             b = static_cast<float>(display_color.b);
  for (std::size_t i = 0; i < depth_.size(); ++i) {
    color_[i * 3] = r;
    color_[i * 3 + 1] = g;
    color_[i * 3 + 2] = b;
  }
  std::fill(depth_.begin(), depth_.end(), std::numeric_limits<float>::infinity());
  std::fill(ids_.begin(), ids_.end(), -1);
}

void main_pass(const Scene& scene, const Tlas* tlas, const VertexArena& arena, std::span<const DrawCommand> draws,
               const RenderConfig& config, HdrFramebuffer& fb) {
  validate_config(config);
  const CameraSetup cam = camera_setup(scene, config);
  if (fb.width() != config.width || fb.height() != config.height || fb.samples() != config.msaa ||
      fb.has_ids() != config.record_sample_ids)
    fb = HdrFramebuffer(config.width, config.height, config.msaa, config.record_sample_ids);
  fb.clear(linear_to_srgb(config.clear_color.value_or(scene.clear_color)));

  const GeometryStage geo = run_geometry_stage(scene, arena, draws, config, cam);

  const int tiles_x = (config.width + kTileSize - 1) / kTileSize;
  const int tiles_y = (config.height + kTileSize - 1) / kTileSize;
  std::vector<std::vector<std::uint32_t>> bins(static_cast<std::size_t>(tiles_x) * tiles_y);
  for (std::uint32_t i = 0; i < geo.tris.size(); ++i) {
    const auto& t = geo.tris[i];
    for (int ty = t.min_y / kTileSize; ty <= t.max_y / kTileSize; ++ty)
      for (int tx = t.min_x / kTileSize; tx <= t.max_x / kTileSize; ++tx)
        bins[static_cast<std::size_t>(ty) * tiles_x + tx].push_back(i);
  }

  const ShadeContext ctx{&scene, tlas, &config, cam.position};
  const auto pattern = sample_pattern(config.msaa);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t tile = next.fetch_add(1); tile < bins.size(); tile = next.fetch_add(1)) {
      const int tx = static_cast<int>(tile % tiles_x), ty = static_cast<int>(tile / tiles_x);
      const int x0 = tx * kTileSize, y0 = ty * kTileSize;
      raster_tile(ctx, geo.tris, bins[tile], x0, y0, std::min(x0 + kTileSize, config.width),
                  std::min(y0 + kTileSize, config.height), pattern, fb);
    }
  };

  unsigned workers = config.workers == 0 ? std::max(1u, std::thread::hardware_concurrency()) : config.workers;
  workers = std::min<unsigned>(workers, static_cast<unsigned>(bins.size()));
  if (workers <= 1) {
    worker();
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (unsigned i = 1; i < workers; ++i) pool.emplace_back(worker);
  worker();
}

HdrFramebuffer main_pass(const Scene& scene, const Tlas* tlas, const VertexArena& arena,
                         std::span<const DrawCommand> draws, const RenderConfig& config) {
  HdrFramebuffer fb;
  main_pass(scene, tlas, arena, draws, config, fb);
  return fb;
}

std::uint8_t quantize_unorm8(double v) {
  if (!(v > 0.0)) return 0;  // also maps NaN to black
  const double scaled = std::floor(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5);
  return static_cast<std::uint8_t>(std::min(255.0, scaled));
}

void resolve_msaa(const HdrFramebuffer& fb, LdrImage& out) {
  if (out.width != fb.width() || out.height != fb.height()) out = LdrImage(fb.width(), fb.height());
  const auto& color = fb.raw_color();
  const int samples = fb.samples();
  for (int y = 0; y < fb.height(); ++y) {
    for (int x = 0; x < fb.width(); ++x) {
      double acc[3] = {0.0, 0.0, 0.0};
      const std::size_t first = fb.index(x, y, 0);
      for (int s = 0; s < samples; ++s)
        for (int c = 0; c < 3; ++c) acc[c] += color[(first + s) * 3 + c];
      std::uint8_t* p = out.pixel(x, y);
      for (int c = 0; c < 3; ++c) p[c] = quantize_unorm8(acc[c] / samples);
    }
  }
}

LdrImage resolve_msaa(const HdrFramebuffer& fb) {
  LdrImage out;
  resolve_msaa(fb, out);
  return out;
}

}  // namespace simrender
