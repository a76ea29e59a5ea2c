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

// Two-level acceleration structure.
//
// One bottom-level BVH (Blas) is built per unique geometry at scene load and
// compacted once; it is never rebuilt. The top-level BVH (Tlas) over the
// transformed instances is rebuilt from scratch every frame.
//
// Both levels use a binned SAH builder (16 bins). Leaves hold at most 4
// primitives; a node with 2..4 primitives is split only when SAH says so.

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "simrender/math.hpp"
#include "simrender/scene.hpp"

namespace simrender {

inline constexpr int kSahBins = 16;
inline constexpr std::uint32_t kMaxLeafSize = 4;
inline constexpr double kIntersectEpsilon = 1e-9;
inline constexpr double kShadowOffset = 1e-4;

struct Aabb {
  Vec3 min{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
           std::numeric_limits<double>::infinity()};
  Vec3 max{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity()};

  bool empty() const { return min.x > max.x || min.y > max.y || min.z > max.z; }
  void extend(Vec3 p) {
    min = vmin(min, p);
    max = vmax(max, p);
  }
  void extend(const Aabb& b) {
    min = vmin(min, b.min);
    max = vmax(max, b.max);
  }
  Vec3 centroid() const { return (min + max) * 0.5; }
  double surface_area() const;
  bool contains(const Aabb& b) const;
  bool contains(Vec3 p) const;
  friend bool operator==(const Aabb&, const Aabb&) = default;
};

/// Bounds of `box` after an affine transform (all 8 corners).
Aabb transform_aabb(const Mat4& m, const Aabb& box);

/// Inner node: `count == 0`, children at `left` / `right`.
/// Leaf: `count` primitives starting at `first` in the primitive order.
struct BvhNode {
  Aabb bounds;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  std::uint32_t first = 0;
  std::uint32_t count = 0;
  bool is_leaf() const { return count > 0; }
};

struct BvhStats {
  std::size_t node_count = 0;
  std::size_t leaf_count = 0;
  std::size_t depth = 0;
  double sah_cost = 0.0;
};

using TriangleVerts = std::array<Vec3, 3>;

class Blas {
 public:
  std::uint32_t geometry_id = 0;
  std::vector<BvhNode> nodes;             // nodes[0] is the root
  std::vector<std::uint32_t> tri_order;   // leaf ranges index into this
  std::vector<TriangleVerts> leaf_tris;   // positions, in tri_order order
  bool compacted = false;

  // Build-time data, released by compact_blas.
  std::vector<Aabb> scratch_bounds;
  std::vector<Vec3> scratch_centroids;

  const Aabb& bounds() const { return nodes.front().bounds; }
  std::size_t footprint_bytes() const;
  BvhStats stats() const;
};

struct Ray {
  Vec3 origin;
  Vec3 direction;  // unit length for world-space queries
  double t_min = 0.0;
  double t_max = std::numeric_limits<double>::infinity();
};

struct Hit {
  double t = 0.0;
  std::uint32_t instance_id = 0;
  std::uint32_t triangle = 0;  // index into the geometry's triangle list
  double u = 0.0, v = 0.0;
};

struct TlasInstance {
  std::uint32_t blas = 0;  // index into the Blas list handed to build_tlas
  Mat4 transform;          // object -> world
  std::string node_name;
  std::uint32_t instance_id = 0;
};

class Tlas {
 public:
  std::span<const Blas> blases;
  std::vector<TlasInstance> instances;
  std::vector<Mat4> inverse_transforms;
  std::vector<Aabb> world_bounds;
  std::vector<BvhNode> nodes;
  std::vector<std::uint32_t> instance_order;
  std::uint64_t frame_index = 0;

  bool empty() const { return instances.empty(); }
  BvhStats stats() const;
  /// Flat byte image of the structure (determinism checks).
  std::vector<std::uint8_t> serialize() const;
};

Blas build_blas(const MeshGeometry& geometry, std::uint32_t geometry_id = 0);
Blas compact_blas(Blas blas);
Tlas build_tlas(std::span<const Blas> blases, std::vector<TlasInstance> instances, std::uint64_t frame_index = 0);

/// One instance per mesh-bearing node, in node order; `blas` = geometry id.
std::vector<TlasInstance> collect_instances(const Scene& scene);

std::optional<Hit> ray_closest_hit(const Tlas& tlas, const Ray& ray);
bool ray_any_hit(const Tlas& tlas, const Ray& ray);
int shadow_visibility(const Tlas& tlas, Vec3 point, Vec3 normal, Vec3 light_pos);

/// Instance ids whose world bounds contain `p`, found by TLAS traversal.
std::vector<std::uint32_t> instances_containing(const Tlas& tlas, Vec3 p);

/// Ray/triangle test shared by the BVH path and the oracle.
std::optional<Hit> intersect_triangle(const Ray& ray, const TriangleVerts& tri);

struct WorldTriangle {
  std::uint32_t instance_id = 0;
  std::uint32_t triangle = 0;
  TriangleVerts verts;
};

/// World-space triangles of every mesh instance (instance ids as in collect_instances).
std::vector<WorldTriangle> world_triangles(const Scene& scene);
std::optional<Hit> brute_force_closest_hit(std::span<const WorldTriangle> triangles, const Ray& ray);

/// "nodes=N leaves=L depth=D sah=S" plus one line per node.
std::string dump_bvh(std::span<const BvhNode> nodes);

}  // namespace simrender
