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
#include <array>
#include <cstring>
#include <deque>
#include <sstream>

#include "simrender/accel.hpp"
#include "simrender/error.hpp"

namespace simrender {

double Aabb::surface_area() const {
  if (empty()) return 0.0;
  const Vec3 d = max - min;
  return 2.0 * (d.x * d.y + d.y * d.z + d.z * d.x);
}

bool Aabb::contains(const Aabb& b) const {
  return min.x <= b.min.x && min.y <= b.min.y && min.z <= b.min.z && max.x >= b.max.x && max.y >= b.max.y &&
         max.z >= b.max.z;
}

bool Aabb::contains(Vec3 p) const {
  return min.x <= p.x && min.y <= p.y && min.z <= p.z && max.x >= p.x && max.y >= p.y && max.z >= p.z;
}

Aabb transform_aabb(const Mat4& m, const Aabb& box) {
  Aabb out;
  if (box.empty()) return out;
  for (int corner = 0; corner < 8; ++corner) {
    const Vec3 p{(corner & 1) ? box.max.x : box.min.x, (corner & 2) ? box.max.y : box.min.y,
                 (corner & 4) ? box.max.z : box.min.z};
    out.extend(transform_point(m, p));
  }
  return out;
}

namespace {

constexpr double kTraversalCost = 1.0;
constexpr double kIntersectCost = 1.0;

// Binned SAH build over primitive bounds. Nodes are emitted breadth-first;
// compaction later rewrites them depth-first.
struct BuildResult {
  std::vector<BvhNode> nodes;
  std::vector<std::uint32_t> order;
};

BuildResult build_bvh(std::span<const Aabb> prim_bounds, std::span<const Vec3> centroids) {
  BuildResult r;
  const auto n = static_cast<std::uint32_t>(prim_bounds.size());
  r.order.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) r.order[i] = i;
  if (n == 0) return r;

  struct Task {
    std::uint32_t node, begin, end;
  };
  std::deque<Task> queue;
  r.nodes.push_back({});
  queue.push_back({0, 0, n});

  while (!queue.empty()) {
    const Task task = queue.front();
    queue.pop_front();
    const std::uint32_t count = task.end - task.begin;

    Aabb bounds, centroid_bounds;
    for (std::uint32_t i = task.begin; i < task.end; ++i) {
      bounds.extend(prim_bounds[r.order[i]]);
      centroid_bounds.extend(centroids[r.order[i]]);
    }
    r.nodes[task.node].bounds = bounds;

    auto make_leaf = [&] {
      r.nodes[task.node].first = task.begin;
      r.nodes[task.node].count = count;
    };
    if (count == 1) {
      make_leaf();
      continue;
    }

    // Evaluate binned splits on every axis with a non-degenerate centroid extent.
    int best_axis = -1, best_split = -1;
    double best_cost = std::numeric_limits<double>::infinity();
    for (int axis = 0; axis < 3; ++axis) {
      const double lo = centroid_bounds.min[axis], hi = centroid_bounds.max[axis];
      if (!(hi > lo)) continue;
      const double scale = kSahBins / (hi - lo);
      std::array<Aabb, kSahBins> bin_bounds{};
      std::array<std::uint32_t, kSahBins> bin_count{};
      for (std::uint32_t i = task.begin; i < task.end; ++i) {
        const auto p = r.order[i];
        const int b = std::min(kSahBins - 1, static_cast<int>((centroids[p][axis] - lo) * scale));
        ++bin_count[b];
        bin_bounds[b].extend(prim_bounds[p]);
      }
      std::array<double, kSahBins> right_area{};
      std::array<std::uint32_t, kSahBins> right_count{};
      Aabb acc;
      std::uint32_t acc_n = 0;
      for (int b = kSahBins - 1; b > 0; --b) {
        acc.extend(bin_bounds[b]);
        acc_n += bin_count[b];
        right_area[b] = acc.surface_area();
        right_count[b] = acc_n;
      }
      Aabb left;
      std::uint32_t left_n = 0;
      for (int split = 1; split < kSahBins; ++split) {
        left.extend(bin_bounds[split - 1]);
        left_n += bin_count[split - 1];
        if (left_n == 0 || right_count[split] == 0) continue;
        const double cost = left.surface_area() * left_n + right_area[split] * right_count[split];
        if (cost < best_cost) {
          best_cost = cost;
          best_axis = axis;
          best_split = split;
        }
      }
    }

    const double parent_area = bounds.surface_area();
    const double leaf_cost = kIntersectCost * count;
    const double split_cost =
        best_axis < 0 ? std::numeric_limits<double>::infinity()
                      : kTraversalCost + (parent_area > 0.0 ? kIntersectCost * best_cost / parent_area : leaf_cost);
    if (count <= kMaxLeafSize && !(split_cost < leaf_cost)) {
      make_leaf();
      continue;
    }

    std::uint32_t mid;
    if (best_axis >= 0) {
      const double lo = centroid_bounds.min[best_axis];
      const double scale = kSahBins / (centroid_bounds.max[best_axis] - lo);
      auto first = r.order.begin() + task.begin, last = r.order.begin() + task.end;
      auto it = std::stable_partition(first, last, [&](std::uint32_t p) {
        const int b = std::min(kSahBins - 1, static_cast<int>((centroids[p][best_axis] - lo) * scale));
        return b < best_split;
      });
      mid = static_cast<std::uint32_t>(it - r.order.begin());
    } else {
      // Coincident centroids: split the range in half to honour the leaf size cap.
      mid = task.begin + count / 2;
    }

    const auto left_index = static_cast<std::uint32_t>(r.nodes.size());
    r.nodes.push_back({});
    r.nodes.push_back({});
    r.nodes[task.node].left = left_index;
    r.nodes[task.node].right = left_index + 1;
    queue.push_back({left_index, task.begin, mid});
    queue.push_back({left_index + 1, mid, task.end});
  }
  return r;
}

BvhStats compute_stats(std::span<const BvhNode> nodes) {
  BvhStats s;
  s.node_count = nodes.size();
  if (nodes.empty()) return s;
  const double root_area = nodes[0].bounds.surface_area();
  std::vector<std::pair<std::uint32_t, std::size_t>> stack{{0, 1}};
  while (!stack.empty()) {
    const auto [i, depth] = stack.back();
    stack.pop_back();
    const auto& node = nodes[i];
    s.depth = std::max(s.depth, depth);
    const double rel = root_area > 0.0 ? node.bounds.surface_area() / root_area : 1.0;
    if (node.is_leaf()) {
      ++s.leaf_count;
      s.sah_cost += rel * kIntersectCost * node.count;
    } else {
      s.sah_cost += rel * kTraversalCost;
      stack.push_back({node.right, depth + 1});
      stack.push_back({node.left, depth + 1});
    }
  }
  return s;
}

// Slab test; returns the entry distance or +inf on a miss.
inline double ray_box(const Aabb& b, Vec3 origin, Vec3 inv_dir, double t_min, double t_max) {
  double t0 = t_min, t1 = t_max;
  for (int a = 0; a < 3; ++a) {
    double near = (b.min[a] - origin[a]) * inv_dir[a];
    double far = (b.max[a] - origin[a]) * inv_dir[a];
    if (near > far) std::swap(near, far);
    // NaN (0 * inf) means the origin lies on the slab plane; treat as inside.
    // The relative pad keeps boxes conservative against rounding in the slab math.
    if (near == near) t0 = std::max(t0, near - std::abs(near) * 1e-12);
    if (far == far) t1 = std::min(t1, far + std::abs(far) * 1e-12);
    if (t0 > t1) return std::numeric_limits<double>::infinity();
  }
  return t0;
}

inline bool closer(const Hit& a, const Hit& b) {
  if (a.t != b.t) return a.t < b.t;
  if (a.instance_id != b.instance_id) return a.instance_id < b.instance_id;
  return a.triangle < b.triangle;
}

Vec3 reciprocal(Vec3 d) {
  return {1.0 / d.x, 1.0 / d.y, 1.0 / d.z};
}

// Traverses one BLAS with an object-space ray. With `any` set, returns at the
// first accepted hit.
bool traverse_blas(const Blas& blas, const Ray& ray, std::uint32_t instance_id, std::optional<Hit>& best, bool any) {
  const Vec3 inv = reciprocal(ray.direction);
  thread_local std::vector<std::uint32_t> stack;
  stack.clear();
  stack.push_back(0);
  while (!stack.empty()) {
    const auto& node = blas.nodes[stack.back()];
    stack.pop_back();
    const double limit = best ? best->t : ray.t_max;
    if (ray_box(node.bounds, ray.origin, inv, ray.t_min, limit) == std::numeric_limits<double>::infinity()) continue;
    if (node.is_leaf()) {
      for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
        Ray r = ray;
        r.t_max = best ? best->t : ray.t_max;
        auto hit = intersect_triangle(r, blas.leaf_tris[i]);
        if (!hit) continue;
        if (any && !(hit->t > ray.t_min && hit->t < ray.t_max)) continue;
        hit->instance_id = instance_id;
        hit->triangle = blas.tri_order[i];
        if (!best || closer(*hit, *best)) best = hit;
        if (any) return true;
      }
      continue;
    }
    const auto& l = blas.nodes[node.left];
    const auto& rn = blas.nodes[node.right];
    const double tl = ray_box(l.bounds, ray.origin, inv, ray.t_min, limit);
    const double tr = ray_box(rn.bounds, ray.origin, inv, ray.t_min, limit);
    // Push the farther child first so the nearer one is popped next.
    if (tl <= tr) {
      stack.push_back(node.right);
      stack.push_back(node.left);
    } else {
      stack.push_back(node.left);
      stack.push_back(node.right);
    }
  }
  return false;
}

std::optional<Hit> traverse_tlas(const Tlas& tlas, const Ray& ray, bool any) {
  std::optional<Hit> best;
  if (tlas.nodes.empty()) return best;
  const Vec3 inv = reciprocal(ray.direction);
  thread_local std::vector<std::uint32_t> stack;
  stack.clear();
  stack.push_back(0);
  while (!stack.empty()) {
    const auto& node = tlas.nodes[stack.back()];
    stack.pop_back();
    const double limit = best ? best->t : ray.t_max;
    if (ray_box(node.bounds, ray.origin, inv, ray.t_min, limit) == std::numeric_limits<double>::infinity()) continue;
    if (!node.is_leaf()) {
      stack.push_back(node.right);
      stack.push_back(node.left);
      continue;
    }
    for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
      const auto idx = tlas.instance_order[i];
      const auto& inst = tlas.instances[idx];
      const Mat4& inv_m = tlas.inverse_transforms[idx];
      // Unnormalized object-space direction keeps t identical to world t.
      Ray local{transform_point(inv_m, ray.origin), transform_vector(inv_m, ray.direction), ray.t_min, ray.t_max};
      if (traverse_blas(tlas.blases[inst.blas], local, inst.instance_id, best, any) && any) return best;
    }
  }
  return best;
}

void put_bytes(std::vector<std::uint8_t>& out, const void* p, std::size_t n) {
  const auto* b = static_cast<const std::uint8_t*>(p);
  out.insert(out.end(), b, b + n);
}

void put_node(std::vector<std::uint8_t>& out, const BvhNode& n) {
  for (int a = 0; a < 3; ++a) {
    const double lo = n.bounds.min[a], hi = n.bounds.max[a];
    put_bytes(out, &lo, sizeof lo);
    put_bytes(out, &hi, sizeof hi);
  }
  put_bytes(out, &n.left, 4);
  put_bytes(out, &n.right, 4);
  put_bytes(out, &n.first, 4);
  put_bytes(out, &n.count, 4);
}

}  // namespace

std::optional<Hit> intersect_triangle(const Ray& ray, const TriangleVerts& tri) {
  const Vec3 e1 = tri[1] - tri[0];
  const Vec3 e2 = tri[2] - tri[0];
  const Vec3 p = cross(ray.direction, e2);
  const double det = dot(e1, p);
  if (std::abs(det) < kIntersectEpsilon) return std::nullopt;
  const double inv_det = 1.0 / det;
  const Vec3 s = ray.origin - tri[0];
  const double u = dot(s, p) * inv_det;
  if (u < 0.0 || u > 1.0) return std::nullopt;
  const Vec3 q = cross(s, e1);
  const double v = dot(ray.direction, q) * inv_det;
  if (v < 0.0 || u + v > 1.0) return std::nullopt;
  const double t = dot(e2, q) * inv_det;
  if (!(t >= ray.t_min && t <= ray.t_max)) return std::nullopt;
  Hit h;
  h.t = t;
  h.u = u;
  h.v = v;
  return h;
}

std::size_t Blas::footprint_bytes() const {
  return nodes.size() * sizeof(BvhNode) + tri_order.size() * sizeof(std::uint32_t) +
         leaf_tris.size() * sizeof(TriangleVerts) + scratch_bounds.capacity() * sizeof(Aabb) +
         scratch_centroids.capacity() * sizeof(Vec3);
}

BvhStats Blas::stats() const { return compute_stats(nodes); }

Blas build_blas(const MeshGeometry& geometry, std::uint32_t geometry_id) {
  if (geometry.triangles.empty())
    throw Error(ErrorCode::kValidation, "cannot build an acceleration structure for an empty geometry");
  Blas blas;
  blas.geometry_id = geometry_id;
  const std::size_t n = geometry.triangles.size();
  blas.scratch_bounds.resize(n);
  blas.scratch_centroids.resize(n);
  std::vector<TriangleVerts> verts(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& tri = geometry.triangles[i];
    for (int k = 0; k < 3; ++k) {
      if (tri[k] >= geometry.vertices.size())
        throw Error(ErrorCode::kValidation, "triangle index out of range in geometry '" + geometry.name + "'");
      verts[i][k] = geometry.vertices[tri[k]].position;
      blas.scratch_bounds[i].extend(verts[i][k]);
    }
    blas.scratch_centroids[i] = blas.scratch_bounds[i].centroid();
  }
  auto built = build_bvh(blas.scratch_bounds, blas.scratch_centroids);
  blas.nodes = std::move(built.nodes);
  blas.tri_order = std::move(built.order);
  blas.leaf_tris.resize(n);
  for (std::size_t i = 0; i < n; ++i) blas.leaf_tris[i] = verts[blas.tri_order[i]];
  return blas;
}

Blas compact_blas(Blas blas) {
  if (blas.compacted) return blas;
  std::vector<BvhNode> dfs;
  dfs.reserve(blas.nodes.size());
  std::vector<std::uint32_t> new_order;
  std::vector<TriangleVerts> new_tris;
  new_order.reserve(blas.tri_order.size());
  new_tris.reserve(blas.leaf_tris.size());

  // Depth-first emission: left child directly follows its parent.
  struct Item {
    std::uint32_t old_index;
    std::uint32_t parent;  // index in dfs, or UINT32_MAX
    bool is_right;
  };
  std::vector<Item> stack{{0, UINT32_MAX, false}};
  while (!stack.empty()) {
    const Item item = stack.back();
    stack.pop_back();
    const BvhNode& old = blas.nodes[item.old_index];
    const auto index = static_cast<std::uint32_t>(dfs.size());
    BvhNode node;
    node.bounds = old.bounds;
    if (old.is_leaf()) {
      node.first = static_cast<std::uint32_t>(new_order.size());
      node.count = old.count;
      for (std::uint32_t i = old.first; i < old.first + old.count; ++i) {
        new_order.push_back(blas.tri_order[i]);
        new_tris.push_back(blas.leaf_tris[i]);
      }
    }
    dfs.push_back(node);
    if (item.parent != UINT32_MAX) (item.is_right ? dfs[item.parent].right : dfs[item.parent].left) = index;
    if (!old.is_leaf()) {
      stack.push_back({old.right, index, true});
      stack.push_back({old.left, index, false});
    }
  }
  blas.nodes = std::move(dfs);
  blas.tri_order = std::move(new_order);
  blas.leaf_tris = std::move(new_tris);
  std::vector<Aabb>().swap(blas.scratch_bounds);  // assigning {} would keep the capacity
  std::vector<Vec3>().swap(blas.scratch_centroids);
  blas.nodes.shrink_to_fit();
  blas.compacted = true;
  return blas;
}

BvhStats Tlas::stats() const { return compute_stats(nodes); }

std::vector<std::uint8_t> Tlas::serialize() const {
  std::vector<std::uint8_t> out;
  put_bytes(out, &frame_index, sizeof frame_index);
  const std::uint64_t counts[3] = {instances.size(), nodes.size(), instance_order.size()};
  put_bytes(out, counts, sizeof counts);
  for (const auto& inst : instances) {
    put_bytes(out, &inst.blas, 4);
    put_bytes(out, &inst.instance_id, 4);
    put_bytes(out, inst.transform.m.data(), sizeof(double) * 16);
    const std::uint64_t len = inst.node_name.size();
    put_bytes(out, &len, sizeof len);
    put_bytes(out, inst.node_name.data(), inst.node_name.size());
  }
  for (const auto& node : nodes) put_node(out, node);
  put_bytes(out, instance_order.data(), instance_order.size() * 4);
  return out;
}

Tlas build_tlas(std::span<const Blas> blases, std::vector<TlasInstance> instances, std::uint64_t frame_index) {
  Tlas tlas;
  tlas.blases = blases;
  tlas.frame_index = frame_index;
  tlas.instances = std::move(instances);
  const std::size_t n = tlas.instances.size();
  tlas.inverse_transforms.resize(n);
  tlas.world_bounds.resize(n);
  std::vector<Vec3> centroids(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& inst = tlas.instances[i];
    if (inst.blas >= blases.size())
      throw Error(ErrorCode::kValidation, "instance '" + inst.node_name + "' references a missing BLAS");
    if (!invert(inst.transform, tlas.inverse_transforms[i]))
      throw Error(ErrorCode::kValidation, "instance '" + inst.node_name + "' has a singular transform");
    tlas.world_bounds[i] = transform_aabb(inst.transform, blases[inst.blas].bounds());
    centroids[i] = tlas.world_bounds[i].centroid();
  }
  auto built = build_bvh(tlas.world_bounds, centroids);
  tlas.nodes = std::move(built.nodes);
  tlas.instance_order = std::move(built.order);
  return tlas;
}

std::vector<TlasInstance> collect_instances(const Scene& scene) {
  std::vector<TlasInstance> out;
  out.reserve(scene.nodes.size());
  for (const auto& node : scene.nodes) {
    if (!node.mesh_instance) continue;
    TlasInstance inst;
    inst.blas = node.mesh_instance->geometry;
    inst.transform = node.world;
    inst.node_name = node.name;
    inst.instance_id = static_cast<std::uint32_t>(out.size());
    out.push_back(std::move(inst));
  }
  return out;
}

std::optional<Hit> ray_closest_hit(const Tlas& tlas, const Ray& ray) { return traverse_tlas(tlas, ray, false); }

bool ray_any_hit(const Tlas& tlas, const Ray& ray) { return traverse_tlas(tlas, ray, true).has_value(); }

int shadow_visibility(const Tlas& tlas, Vec3 point, Vec3 normal, Vec3 light_pos) {
  const Vec3 origin = point + normal * kShadowOffset;
  const Vec3 to_light = light_pos - origin;
  const double dist = length(to_light);
  Ray ray{origin, to_light / dist, kShadowOffset, dist - kShadowOffset};
  if (!(ray.t_max > ray.t_min)) return 1;
  return ray_any_hit(tlas, ray) ? 0 : 1;
}

std::vector<std::uint32_t> instances_containing(const Tlas& tlas, Vec3 p) {
  std::vector<std::uint32_t> out;
  if (tlas.nodes.empty()) return out;
  std::vector<std::uint32_t> stack{0};
  while (!stack.empty()) {
    const auto& node = tlas.nodes[stack.back()];
    stack.pop_back();
    if (!node.bounds.contains(p)) continue;
    if (!node.is_leaf()) {
      stack.push_back(node.right);
      stack.push_back(node.left);
      continue;
    }
    for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
      const auto idx = tlas.instance_order[i];
      if (tlas.world_bounds[idx].contains(p)) out.push_back(tlas.instances[idx].instance_id);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<WorldTriangle> world_triangles(const Scene& scene) {
  std::vector<WorldTriangle> out;
  std::uint32_t instance = 0;
  for (const auto& node : scene.nodes) {
    if (!node.mesh_instance) continue;
    const auto& geo = scene.geometries[node.mesh_instance->geometry];
    for (std::uint32_t t = 0; t < geo.triangles.size(); ++t) {
      WorldTriangle wt;
      wt.instance_id = instance;
      wt.triangle = t;
      for (int k = 0; k < 3; ++k) wt.verts[k] = transform_point(node.world, geo.vertices[geo.triangles[t][k]].position);
      out.push_back(wt);
    }
    ++instance;
  }
  return out;
}

std::optional<Hit> brute_force_closest_hit(std::span<const WorldTriangle> triangles, const Ray& ray) {
  std::optional<Hit> best;
  for (const auto& tri : triangles) {
    auto hit = intersect_triangle(ray, tri.verts);
    if (!hit) continue;
    hit->instance_id = tri.instance_id;
    hit->triangle = tri.triangle;
    if (!best || closer(*hit, *best)) best = hit;
  }
  return best;
}

std::string dump_bvh(std::span<const BvhNode> nodes) {
  const auto s = compute_stats(nodes);
  std::ostringstream out;
  out.precision(6);
  out << std::fixed << "nodes=" << s.node_count << " leaves=" << s.leaf_count << " depth=" << s.depth
      << " sah=" << s.sah_cost << "\n";
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    out << i << (n.is_leaf() ? " leaf first=" + std::to_string(n.first) + " count=" + std::to_string(n.count)
                             : " inner left=" + std::to_string(n.left) + " right=" + std::to_string(n.right))
        << " min=(" << n.bounds.min.x << "," << n.bounds.min.y << "," << n.bounds.min.z << ") max=("
        << n.bounds.max.x << "," << n.bounds.max.y << "," << n.bounds.max.z << ")\n";
  }
  return out.str();
}

}  // namespace simrender
