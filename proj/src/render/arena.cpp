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

#include <algorithm>
#include <tuple>

#include "simrender/error.hpp"
#include "simrender/render.hpp"

namespace simrender {

void validate_config(const RenderConfig& config) {
  if (config.width < 1 || config.height < 1)
    throw Error(ErrorCode::kConfig, "resolution must be at least 1x1");
  if (config.msaa != 1 && config.msaa != 2 && config.msaa != 4 && config.msaa != 8)
    throw Error(ErrorCode::kConfig, "msaa must be 1, 2, 4 or 8 (got " + std::to_string(config.msaa) + ")");
  if (config.target_hz < 0.0) throw Error(ErrorCode::kConfig, "target frame rate must be non-negative");
}

std::vector<DrawCommand> build_draw_list(const Scene& scene) {
  std::vector<DrawCommand> draws;
  draws.reserve(scene.nodes.size());
  for (std::uint32_t i = 0; i < scene.nodes.size(); ++i) {
    const auto& node = scene.nodes[i];
    if (!node.mesh_instance) continue;
    DrawCommand cmd;
    cmd.material_id = scene.materials[node.mesh_instance->material].material_id;
    cmd.segment_id = node.mesh_instance->geometry;
    cmd.node_name = node.name;
    cmd.node = i;
    cmd.geometry = node.mesh_instance->geometry;
    cmd.world = node.world;
    draws.push_back(std::move(cmd));
  }
  std::sort(draws.begin(), draws.end(), [](const DrawCommand& a, const DrawCommand& b) {
    return std::tie(a.material_id, a.segment_id, a.node_name) < std::tie(b.material_id, b.segment_id, b.node_name);
  });
  return draws;
}

std::size_t count_material_switches(std::span<const DrawCommand> draws) {
  std::size_t switches = 0;
  for (std::size_t i = 1; i < draws.size(); ++i)
    if (draws[i].material_id != draws[i - 1].material_id) ++switches;
  return switches;
}

VertexArena pack_vertex_arena(const Scene& scene) {
  VertexArena arena;
  std::size_t total = 0;
  for (const auto& g : scene.geometries) total += g.vertices.size();
  arena.vertices.reserve(total);
  for (const auto& g : scene.geometries) {
    arena.base.push_back(static_cast<std::uint32_t>(arena.vertices.size()));
    arena.count.push_back(static_cast<std::uint32_t>(g.vertices.size()));
    arena.vertices.insert(arena.vertices.end(), g.vertices.begin(), g.vertices.end());
  }
  return arena;
}

const Camera& select_camera(const Scene& scene, const RenderConfig& config) {
  if (scene.cameras.empty()) throw Error(ErrorCode::kConfig, "scene has no camera");
  if (config.camera.empty()) return scene.cameras.front();
  for (const auto& cam : scene.cameras) {
    if (cam.name == config.camera) return cam;
    if (cam.node && scene.nodes[*cam.node].name == config.camera) return cam;
  }
  throw Error(ErrorCode::kConfig, "camera '" + config.camera + "' not found");
}

Mat4 perspective(double vertical_fov, double aspect, double znear, double zfar) {
  const double f = 1.0 / std::tan(vertical_fov * 0.5);
  Mat4 p;
  p.m.fill(0.0);
  p.at(0, 0) = f / aspect;
  p.at(1, 1) = f;
  p.at(2, 2) = zfar / (znear - zfar);
  p.at(2, 3) = znear * zfar / (znear - zfar);
  p.at(3, 2) = -1.0;
  return p;
}

CameraSetup camera_setup(const Scene& scene, const RenderConfig& config) {
  const Camera& cam = select_camera(scene, config);
  const Mat4 cam_world = cam.node ? scene.nodes[*cam.node].world : Mat4::identity();
  CameraSetup setup;
  if (!invert(cam_world, setup.view)) throw Error(ErrorCode::kConfig, "camera transform is singular");
  setup.projection = perspective(cam.vertical_fov, static_cast<double>(config.width) / config.height, cam.znear,
                                 cam.zfar);
  setup.position = cam_world.translation();
  return setup;
}

}  // namespace simrender
