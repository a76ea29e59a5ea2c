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

// Shared test helpers: programmatic scenes and independent oracles. The
// oracles deliberately avoid the library's own math where they check it.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "simrender/accel.hpp"
#include "simrender/render.hpp"
#include "simrender/scene.hpp"

namespace simtest {

using simrender::Mat4;
using simrender::Rgb;
using simrender::Vec3;

std::filesystem::path asset_path(const std::string& name);
std::filesystem::path golden_path(const std::string& name);
std::filesystem::path cli_path();
/// Fresh directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& tag);

// ---- scene builders -------------------------------------------------------

simrender::MeshGeometry make_quad(double half, double z = 0.0);  // in XY, normal +Z
simrender::MeshGeometry make_floor(double half, int cells);      // in XZ, normal +Y
simrender::MeshGeometry make_uv_sphere(double radius, int slices, int stacks);
simrender::MeshGeometry make_random_mesh(std::size_t triangles, std::uint64_t seed, double extent = 1.0);

struct SceneBuilder {
  simrender::Scene scene;
  std::uint32_t add_geometry(simrender::MeshGeometry g);
  std::uint32_t add_material(Rgb color, double metallic, double roughness);
  std::uint32_t add_mesh_node(const std::string& name, std::uint32_t geometry, std::uint32_t material,
                              const Mat4& local = Mat4::identity());
  std::uint32_t add_camera(const std::string& name, const Mat4& local, double fov, double znear = 0.1,
                           double zfar = 100.0);
  void add_light(const std::string& name, Vec3 position, Rgb intensity);
  simrender::Scene finish();
};

/// Camera-to-world rotation looking from `eye` towards `target` (up = +Y).
Mat4 look_at(Vec3 eye, Vec3 target);

/// Camera at the origin (90 degree fov, square image) facing a large lit
/// triangle at z = -1 whose one visible edge is the screen-space segment a->b.
struct EdgeScene {
  simrender::Scene scene;
  int size = 64;
  double ax = 0, ay = 0, bx = 0, by = 0;
};
EdgeScene make_edge_scene(int size = 64);

/// Mean over all pixels of |sample coverage - exact pixel area| for the
/// edge scene rendered at the given sample count.
double msaa_coverage_error(int msaa, int size = 64);

/// Floor, a sphere of radius 0.5 at (0, 1, 0) and a point light at (0, 3, 0).
simrender::Scene shadow_scene();

/// Cells of a 10x10 floor grid over [-0.9, 0.9]^2 where shadow_visibility
/// disagrees with an analytic segment/sphere test.
int shadow_grid_disagreements();

// ---- oracles ----------------------------------------------------------------

using M4 = std::array<std::array<double, 4>, 4>;  // [row][col]
M4 m4_identity();
M4 m4_mul(const M4& a, const M4& b);
M4 m4_translate(double x, double y, double z);
M4 m4_rot_x(double a);
M4 m4_rot_y(double a);
M4 m4_rot_z(double a);
M4 m4_from(const Mat4& m);
double m4_max_diff(const M4& a, const M4& b);

/// Stub pose for node k at tick t, built without the library.
M4 stub_pose(std::uint64_t t, std::size_t k);

/// Single-point evaluation of the direct-lighting formula (one light).
Rgb shade_point_oracle(Vec3 p, Vec3 n, Vec3 eye, Vec3 light, Rgb intensity, Rgb base, double metallic,
                       double roughness);
double srgb_encode_oracle(double linear);

double spearman(const std::vector<double>& a, const std::vector<double>& b);

/// Area of the unit pixel [x, x+1] x [y, y+1] on the side of the directed
/// line a->b where the cross product is positive.
double half_plane_pixel_area(double px, double py, double ax, double ay, double bx, double by);

/// Rows whose hard transition (first |dL| > 0.5 between horizontal neighbours)
/// moves relative to the previous row.
int staircase_metric(const simrender::LdrImage& img);

struct OracleHit {
  double t;
  std::uint32_t instance_id;
  std::uint32_t triangle;
};
/// Closest hit by Moller-Trumbore over every world triangle, written without
/// the library's intersection code.
std::optional<OracleHit> oracle_closest_hit(std::span<const simrender::WorldTriangle> tris, const simrender::Ray& ray);

std::string sha256_hex(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
std::string hex_dump(const std::uint8_t* data, std::size_t size);

struct ProcessResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};
ProcessResult run_process(const std::vector<std::string>& args);

}  // namespace simtest
