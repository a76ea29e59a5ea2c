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
#include <optional>
#include <random>
#include <set>

#include "doctest.h"
#include "simrender/accel.hpp"
#include "simrender/error.hpp"
#include "support.hpp"

using namespace simrender;

namespace {

struct TwoInstanceScene {
  Scene scene;
  std::vector<Blas> blases;
  std::vector<Blas> compacted;

  explicit TwoInstanceScene(std::uint64_t seed) {
    simtest::SceneBuilder b;
    const auto g = b.add_geometry(simtest::make_random_mesh(500, seed));
    const auto m = b.add_material({1, 1, 1}, 0, 1);
    b.add_mesh_node("left", g, m, Mat4::translate({-0.8, 0.1, 0}) * Mat4::rotate_z(0.4));
    b.add_mesh_node("right", g, m,
                    Mat4::translate({0.9, -0.2, 0.3}) * Mat4::rotate_quat(0.0, 0.38268343, 0.0, 0.92387953));
    scene = b.finish();
    blases.push_back(build_blas(scene.geometries[0], 0));
    compacted.push_back(compact_blas(blases[0]));
  }
};

std::vector<Ray> random_rays(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Ray> rays;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 origin{3 * u(rng), 3 * u(rng), 4 + u(rng)};
    const Vec3 target{1.8 * u(rng), 1.2 * u(rng), 0.5 * u(rng)};
    rays.push_back({origin, normalize(target - origin)});
  }
  return rays;
}

void check_structure(const Blas& blas, const MeshGeometry& geo) {
  std::multiset<std::uint32_t> seen(blas.tri_order.begin(), blas.tri_order.end());
  REQUIRE(seen.size() == geo.triangles.size());
  for (std::uint32_t t = 0; t < geo.triangles.size(); ++t) CHECK(seen.count(t) == 1);
  REQUIRE(blas.leaf_tris.size() == blas.tri_order.size());
  for (std::size_t i = 0; i < blas.tri_order.size(); ++i) {
    const auto& tri = geo.triangles[blas.tri_order[i]];
    for (int k = 0; k < 3; ++k) CHECK(blas.leaf_tris[i][k] == geo.vertices[tri[k]].position);
  }
  std::vector<int> reached(blas.nodes.size(), 0);
  std::vector<std::uint32_t> stack{0};
  while (!stack.empty()) {
    const auto idx = stack.back();
    stack.pop_back();
    ++reached[idx];
    const auto& n = blas.nodes[idx];
    if (n.is_leaf()) {
      CHECK(n.count <= kMaxLeafSize);
      for (std::uint32_t i = n.first; i < n.first + n.count; ++i)
        for (const auto& p : blas.leaf_tris[i]) CHECK(n.bounds.contains(p));
    } else {
      CHECK(n.bounds.contains(blas.nodes[n.left].bounds));
      CHECK(n.bounds.contains(blas.nodes[n.right].bounds));
      stack.push_back(n.left);
      stack.push_back(n.right);
    }
  }
  for (int r : reached) CHECK(r == 1);
}

}  // namespace

TEST_CASE("bottom-level structure invariants") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto geo = simtest::make_random_mesh(500, seed);
    const Blas blas = build_blas(geo);
    check_structure(blas, geo);
    check_structure(compact_blas(blas), geo);
  }
  const auto sphere = simtest::make_uv_sphere(1.0, 24, 12);
  check_structure(build_blas(sphere), sphere);
  const auto one = simtest::make_quad(1.0);
  const Blas tiny = build_blas(one);
  CHECK(tiny.nodes.size() == 1);
  check_structure(tiny, one);
}

TEST_CASE("compaction releases build data and lays nodes out depth-first") {
  const auto geo = simtest::make_random_mesh(2000, 9);
  const Blas built = build_blas(geo);
  const Blas packed = compact_blas(built);
  CHECK(packed.compacted);
  CHECK(packed.scratch_bounds.empty());
  CHECK(packed.scratch_centroids.empty());
  CHECK(packed.footprint_bytes() < built.footprint_bytes());
  CHECK(packed.stats().node_count == built.stats().node_count);
  CHECK(packed.stats().depth == built.stats().depth);
  CHECK(packed.stats().sah_cost == doctest::Approx(built.stats().sah_cost));
  for (std::size_t i = 0; i < packed.nodes.size(); ++i)
    if (!packed.nodes[i].is_leaf()) CHECK(packed.nodes[i].left == i + 1);
}

TEST_CASE("closest hit matches brute force over two instances") {
  const TwoInstanceScene fx(42);
  const auto tris = world_triangles(fx.scene);
  const Tlas tlas = build_tlas(fx.blases, collect_instances(fx.scene));
  int hits = 0;
  for (const auto& ray : random_rays(1000, 5)) {
    const auto want = simtest::oracle_closest_hit(tris, ray);
    const auto got = ray_closest_hit(tlas, ray);
    REQUIRE(want.has_value() == got.has_value());
    CHECK(ray_any_hit(tlas, ray) == want.has_value());
    if (!want) continue;
    ++hits;
    CHECK(got->instance_id == want->instance_id);
    CHECK(got->triangle == want->triangle);
    CHECK(std::abs(got->t - want->t) <= 1e-6 * want->t);
    const auto lib = brute_force_closest_hit(tris, ray);
    REQUIRE(lib);
    CHECK(lib->triangle == want->triangle);
  }
  CHECK(hits > 300);
}

TEST_CASE("compaction changes no query result") {
  const TwoInstanceScene fx(77);
  const Tlas a = build_tlas(fx.blases, collect_instances(fx.scene));
  const Tlas b = build_tlas(fx.compacted, collect_instances(fx.scene));
  for (const auto& ray : random_rays(1000, 8)) {
    const auto ha = ray_closest_hit(a, ray);
    const auto hb = ray_closest_hit(b, ray);
    REQUIRE(ha.has_value() == hb.has_value());
    if (!ha) continue;
    CHECK(ha->t == hb->t);
    CHECK(ha->instance_id == hb->instance_id);
    CHECK(ha->triangle == hb->triangle);
  }
}

TEST_CASE("top-level rebuild is byte-identical") {
  const TwoInstanceScene fx(3);
  const auto first = build_tlas(fx.compacted, collect_instances(fx.scene), 7).serialize();
  for (int i = 0; i < 5; ++i) CHECK(build_tlas(fx.compacted, collect_instances(fx.scene), 7).serialize() == first);
}

TEST_CASE("ray interval limits hits") {
  const TwoInstanceScene fx(4);
  const Tlas tlas = build_tlas(fx.blases, collect_instances(fx.scene));
  for (auto ray : random_rays(200, 12)) {
    const auto hit = ray_closest_hit(tlas, ray);
    if (!hit) continue;
    ray.t_max = hit->t * 0.999;
    const auto before = ray_closest_hit(tlas, ray);
    if (before) CHECK(before->t < hit->t);
  }
}

TEST_CASE("world bounds and point containment") {
  const TwoInstanceScene fx(6);
  const Tlas tlas = build_tlas(fx.blases, collect_instances(fx.scene));
  for (std::size_t i = 0; i < tlas.instances.size(); ++i) {
    const auto& local = fx.blases[0].bounds();
    for (int c = 0; c < 8; ++c) {
      const Vec3 corner{c & 1 ? local.max.x : local.min.x, c & 2 ? local.max.y : local.min.y,
                        c & 4 ? local.max.z : local.min.z};
      const Vec3 w = transform_point(tlas.instances[i].transform, corner);
      CHECK(tlas.world_bounds[i].min.x <= w.x + 1e-12);
      CHECK(tlas.world_bounds[i].max.y >= w.y - 1e-12);
    }
  }
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-2.5, 2.5);
  for (int i = 0; i < 500; ++i) {
    const Vec3 p{u(rng), u(rng), u(rng)};
    auto got = instances_containing(tlas, p);
    std::sort(got.begin(), got.end());
    std::vector<std::uint32_t> want;
    for (std::uint32_t k = 0; k < tlas.world_bounds.size(); ++k)
      if (tlas.world_bounds[k].contains(p)) want.push_back(tlas.instances[k].instance_id);
    CHECK(got == want);
  }
}

TEST_CASE("shadow visibility against a single occluder") {
  simtest::SceneBuilder b;
  const auto g = b.add_geometry(simtest::make_quad(0.5, 1.0));  // occluder at z = 1
  b.add_mesh_node("blocker", g, b.add_material({1, 1, 1}, 0, 1));
  const Scene s = b.finish();
  const std::vector<Blas> blases{compact_blas(build_blas(s.geometries[0]))};
  const Tlas tlas = build_tlas(blases, collect_instances(s));
  const Vec3 up{0, 0, 1};
  CHECK(shadow_visibility(tlas, {0, 0, 0}, up, {0, 0, 2}) == 0);
  CHECK(shadow_visibility(tlas, {2, 0, 0}, up, {2, 0, 2}) == 1);
  CHECK(shadow_visibility(tlas, {0, 0, 0}, up, {0, 0, 0.5}) == 1);  // light below the occluder
  // A surface point lying on the occluder itself is not self-shadowed.
  CHECK(shadow_visibility(tlas, {0.1, 0.1, 1.0}, up, {0.1, 0.1, 3.0}) == 1);
}

TEST_CASE("errors") {
  MeshGeometry empty;
  try {
    build_blas(empty);
    FAIL("expected validation error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kValidation);
  }
  const std::vector<Blas> blases{build_blas(simtest::make_quad(1.0))};
  TlasInstance bad;
  bad.transform = Mat4::scale({1, 0, 1});
  bad.node_name = "flat";
  CHECK_THROWS_AS(build_tlas(blases, {bad}), Error);
  TlasInstance missing;
  missing.blas = 3;
  CHECK_THROWS_AS(build_tlas(blases, {missing}), Error);
}

TEST_CASE("empty top level answers no hits") {
  const std::vector<Blas> none;
  const Tlas tlas = build_tlas(none, {});
  CHECK(tlas.empty());
  CHECK_FALSE(ray_closest_hit(tlas, {{0, 0, 0}, {0, 0, 1}}).has_value());
  CHECK(shadow_visibility(tlas, {0, 0, 0}, {0, 0, 1}, {0, 0, 5}) == 1);
}

TEST_CASE("debug dump lists every node") {
  const Blas blas = compact_blas(build_blas(simtest::make_random_mesh(64, 2)));
  const std::string text = dump_bvh(blas.nodes);
  const auto s = blas.stats();
  CHECK(text.rfind("nodes=" + std::to_string(s.node_count) + " leaves=" + std::to_string(s.leaf_count), 0) == 0);
  CHECK(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) == blas.nodes.size() + 1);
  CHECK(text.find("0 inner left=1") != std::string::npos);
}
