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

// Scene graph: a node hierarchy whose nodes point into global, type-specific
// containers (geometries, materials, lights, cameras). Loaded from a factor-only
// glTF 2.0 subset.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "simrender/math.hpp"

namespace simrender {

struct Vertex {
  Vec3 position;
  Vec3 normal{0.0, 0.0, 1.0};
  double u = 0.0, v = 0.0;
  friend bool operator==(const Vertex&, const Vertex&) = default;
};

using Triangle = std::array<std::uint32_t, 3>;

struct MeshGeometry {
  std::string name;
  std::vector<Vertex> vertices;
  std::vector<Triangle> triangles;
  friend bool operator==(const MeshGeometry&, const MeshGeometry&) = default;
};

struct MaterialPbr {
  std::string name;
  Rgb base_color{1.0, 1.0, 1.0};
  double metallic = 1.0;
  double roughness = 1.0;
  std::uint32_t material_id = 0;
  friend bool operator==(const MaterialPbr&, const MaterialPbr&) = default;
};

struct PointLight {
  std::string name;
  Vec3 position;
  Rgb intensity{1.0, 1.0, 1.0};
  std::optional<std::uint32_t> node;  // world position follows this node when set
  friend bool operator==(const PointLight&, const PointLight&) = default;
};

struct Camera {
  std::string name;
  std::optional<std::uint32_t> node;
  double vertical_fov = 0.8;
  double znear = 0.1;
  double zfar = 100.0;
  friend bool operator==(const Camera&, const Camera&) = default;
};

struct MeshInstance {
  std::uint32_t geometry = 0;
  std::uint32_t material = 0;
  friend bool operator==(const MeshInstance&, const MeshInstance&) = default;
};

struct SceneNode {
  std::string name;
  std::optional<std::uint32_t> parent;
  Mat4 local;
  std::optional<MeshInstance> mesh_instance;
  Mat4 world;  // cached; see update_world_transforms / apply_transform_table
  friend bool operator==(const SceneNode&, const SceneNode&) = default;
};

struct Scene {
  std::vector<MeshGeometry> geometries;
  std::vector<MaterialPbr> materials;
  std::vector<PointLight> lights;
  std::vector<Camera> cameras;
  std::vector<SceneNode> nodes;
  Rgb clear_color{0.0, 0.0, 0.0};

  std::optional<std::uint32_t> find_node(std::string_view name) const;
  std::size_t triangle_count() const;       // summed over mesh instances
  std::size_t mesh_instance_count() const;

  friend bool operator==(const Scene&, const Scene&) = default;
};

struct NamedTransform {
  std::string name;
  Mat4 world;
};

/// One consistent copy of the shared transform table.
struct TransformSnapshot {
  std::uint64_t generation = 0;
  std::vector<NamedTransform> transforms;
};

struct ApplyStats {
  std::size_t matched = 0;
  std::size_t unmatched = 0;
};

/// Parses glTF JSON. Sidecar buffers are resolved against `base_dir`.
Scene parse_gltf_subset(std::string_view bytes, const std::filesystem::path& base_dir = {});
Scene load_gltf_file(const std::filesystem::path& path);

/// world(n) = world(parent(n)) * local(n). Throws kStructural on cycles.
std::map<std::string, Mat4> compute_world_transforms(const Scene& scene);

/// Recomputes every node's cached world matrix from the hierarchy and moves
/// node-attached lights.
void update_world_transforms(Scene& scene);

/// Moves node-attached lights to their node's current world translation.
void refresh_light_positions(Scene& scene);

/// Overwrites the cached world matrix of every node named in the snapshot.
ApplyStats apply_transform_table(Scene& scene, const TransformSnapshot& snapshot);

/// Clones every mesh-bearing node 2^doublings - 1 times. Clones share geometry
/// ids; clone c is shifted by `spacing` metres on a square grid in the XZ plane.
Scene duplicate_scene_geometry(const Scene& scene, unsigned doublings, double spacing = 0.1);

/// Fills missing normals with area-weighted face-normal averages.
void generate_normals(MeshGeometry& geometry);

/// Lossless JSON debug dump and its reader.
std::string dump_scene(const Scene& scene);
Scene read_scene_dump(std::string_view text);

/// Throws kValidation when an invariant (index ranges, unique names,
/// resolvable references) does not hold.
void validate_scene(const Scene& scene);

}  // namespace simrender
