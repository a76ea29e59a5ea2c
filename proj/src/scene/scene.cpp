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
#include <cmath>
#include <set>
#include <unordered_map>

#include "simrender/error.hpp"
#include "simrender/scene.hpp"

namespace simrender {

std::optional<std::uint32_t> Scene::find_node(std::string_view name) const {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].name == name) return static_cast<std::uint32_t>(i);
  return std::nullopt;
}

std::size_t Scene::triangle_count() const {
  std::size_t n = 0;
  for (const auto& node : nodes)
    if (node.mesh_instance) n += geometries[node.mesh_instance->geometry].triangles.size();
  return n;
}

std::size_t Scene::mesh_instance_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const SceneNode& n) { return n.mesh_instance.has_value(); }));
}

namespace {

// Evaluation order in which every parent precedes its children.
std::vector<std::uint32_t> topological_order(const Scene& scene) {
  enum class Mark : std::uint8_t { kNone, kActive, kDone };
  const std::size_t n = scene.nodes.size();
  std::vector<Mark> mark(n, Mark::kNone);
  std::vector<std::uint32_t> order;
  order.reserve(n);
  std::vector<std::uint32_t> chain;
  for (std::uint32_t start = 0; start < n; ++start) {
    chain.clear();
    std::uint32_t cur = start;
    // Walk up until reaching a resolved node or a root.
    while (true) {
      if (mark[cur] == Mark::kDone) break;
      if (mark[cur] == Mark::kActive)
        throw Error(ErrorCode::kStructural, "cycle in node hierarchy at node '" + scene.nodes[cur].name + "'");
      mark[cur] = Mark::kActive;
      chain.push_back(cur);
      const auto& parent = scene.nodes[cur].parent;
      if (!parent) break;
      if (*parent >= n)
        throw Error(ErrorCode::kValidation, "node '" + scene.nodes[cur].name + "' has dangling parent index");
      cur = *parent;
    }
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
      mark[*it] = Mark::kDone;
      order.push_back(*it);
    }
  }
  return order;
}

}  // namespace

std::map<std::string, Mat4> compute_world_transforms(const Scene& scene) {
  std::vector<Mat4> world(scene.nodes.size());
  for (std::uint32_t i : topological_order(scene)) {
    const auto& node = scene.nodes[i];
    world[i] = node.parent ? world[*node.parent] * node.local : node.local;
  }
  std::map<std::string, Mat4> out;
  for (std::size_t i = 0; i < scene.nodes.size(); ++i) out.emplace(scene.nodes[i].name, world[i]);
  return out;
}

void update_world_transforms(Scene& scene) {
  for (std::uint32_t i : topological_order(scene)) {
    auto& node = scene.nodes[i];
    node.world = node.parent ? scene.nodes[*node.parent].world * node.local : node.local;
  }
  refresh_light_positions(scene);
}

void refresh_light_positions(Scene& scene) {
  for (auto& light : scene.lights)
    if (light.node && *light.node < scene.nodes.size()) light.position = scene.nodes[*light.node].world.translation();
}

ApplyStats apply_transform_table(Scene& scene, const TransformSnapshot& snapshot) {
  std::unordered_map<std::string_view, std::uint32_t> by_name;
  by_name.reserve(scene.nodes.size());
  for (std::uint32_t i = 0; i < scene.nodes.size(); ++i) by_name.emplace(scene.nodes[i].name, i);

  ApplyStats stats;
  for (const auto& record : snapshot.transforms) {
    auto it = by_name.find(record.name);
    if (it == by_name.end()) {
      ++stats.unmatched;
      continue;
    }
    scene.nodes[it->second].world = record.world;
    ++stats.matched;
  }
  refresh_light_positions(scene);
  return stats;
}

Scene duplicate_scene_geometry(const Scene& scene, unsigned doublings, double spacing) {
  Scene out = scene;
  if (doublings == 0) return out;
  const std::size_t copies = std::size_t{1} << doublings;
  const auto side = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(copies))));

  const std::size_t original_count = scene.nodes.size();
  for (std::size_t c = 1; c < copies; ++c) {
    const Vec3 offset{static_cast<double>(c % side) * spacing, 0.0, static_cast<double>(c / side) * spacing};
    const Mat4 shift = Mat4::translate(offset);
    for (std::size_t i = 0; i < original_count; ++i) {
      const auto& src = scene.nodes[i];
      if (!src.mesh_instance) continue;
      SceneNode clone;
      clone.name = src.name + "#" + std::to_string(c);
      clone.parent = std::nullopt;
      clone.world = shift * src.world;
      clone.local = clone.world;
      clone.mesh_instance = src.mesh_instance;
      out.nodes.push_back(std::move(clone));
    }
  }
  return out;
}

void generate_normals(MeshGeometry& geometry) {
  std::vector<Vec3> accum(geometry.vertices.size());
  for (const auto& tri : geometry.triangles) {
    const Vec3 a = geometry.vertices[tri[0]].position;
    const Vec3 b = geometry.vertices[tri[1]].position;
    const Vec3 c = geometry.vertices[tri[2]].position;
    const Vec3 weighted = cross(b - a, c - a);  // length = 2 * area
    for (auto idx : tri) accum[idx] += weighted;
  }
  for (std::size_t i = 0; i < accum.size(); ++i) {
    const Vec3 n = normalize(accum[i]);
    geometry.vertices[i].normal = length(n) > 0.0 ? n : Vec3{0.0, 0.0, 1.0};
  }
}

void validate_scene(const Scene& scene) {
  std::set<std::string_view> names;
  for (const auto& node : scene.nodes) {
    if (!names.insert(node.name).second)
      throw Error(ErrorCode::kValidation, "duplicate node name '" + node.name + "'");
    if (node.parent && *node.parent >= scene.nodes.size())
      throw Error(ErrorCode::kValidation, "node '" + node.name + "' has dangling parent index");
    if (node.mesh_instance) {
      if (node.mesh_instance->geometry >= scene.geometries.size())
        throw Error(ErrorCode::kValidation, "node '" + node.name + "' references missing geometry");
      if (node.mesh_instance->material >= scene.materials.size())
        throw Error(ErrorCode::kValidation, "node '" + node.name + "' references missing material");
    }
  }
  for (const auto& geo : scene.geometries) {
    if (geo.triangles.empty())
      throw Error(ErrorCode::kValidation, "geometry '" + geo.name + "' has no triangles");
    for (const auto& tri : geo.triangles)
      for (auto idx : tri)
        if (idx >= geo.vertices.size())
          throw Error(ErrorCode::kValidation, "geometry '" + geo.name + "' index out of range");
  }
  for (const auto& cam : scene.cameras) {
    if (cam.node && *cam.node >= scene.nodes.size())
      throw Error(ErrorCode::kValidation, "camera '" + cam.name + "' references missing node");
    if (!(cam.znear > 0.0) || !(cam.zfar > cam.znear) || !(cam.vertical_fov > 0.0 && cam.vertical_fov < kPi))
      throw Error(ErrorCode::kValidation, "camera '" + cam.name + "' has invalid projection parameters");
  }
  for (const auto& light : scene.lights)
    if (light.node && *light.node >= scene.nodes.size())
      throw Error(ErrorCode::kValidation, "light '" + light.name + "' references missing node");
  (void)topological_order(scene);
}

}  // namespace simrender
