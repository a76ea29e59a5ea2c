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

#include "support.hpp"

#include <fcntl.h>
#include <openssl/evp.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>
#include <sstream>

#include "simrender/accel.hpp"
#include "simrender/post.hpp"

extern char** environ;

namespace simtest {

using namespace simrender;

std::filesystem::path asset_path(const std::string& name) { return std::filesystem::path(SIMRENDER_ASSET_DIR) / name; }
std::filesystem::path golden_path(const std::string& name) { return std::filesystem::path(SIMRENDER_GOLDEN_DIR) / name; }
std::filesystem::path cli_path() { return SIMRENDER_CLI_PATH; }

std::filesystem::path scratch_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() / ("simrender-" + tag + "-" + std::to_string(getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

MeshGeometry make_quad(double half, double z) {
  MeshGeometry g;
  g.name = "quad";
  const Vec3 n{0, 0, 1};
  g.vertices = {{{-half, -half, z}, n, 0, 0}, {{half, -half, z}, n, 1, 0}, {{half, half, z}, n, 1, 1},
                {{-half, half, z}, n, 0, 1}};
  g.triangles = {{0, 1, 2}, {0, 2, 3}};
  return g;
}

MeshGeometry make_floor(double half, int cells) {
  MeshGeometry g;
  g.name = "floor";
  for (int j = 0; j <= cells; ++j)
    for (int i = 0; i <= cells; ++i) {
      const double u = static_cast<double>(i) / cells, v = static_cast<double>(j) / cells;
      g.vertices.push_back({{(2 * u - 1) * half, 0.0, (2 * v - 1) * half}, {0, 1, 0}, u, v});
    }
  for (int j = 0; j < cells; ++j)
    for (int i = 0; i < cells; ++i) {
      const auto a = static_cast<std::uint32_t>(j * (cells + 1) + i);
      const auto c = a + static_cast<std::uint32_t>(cells + 1);
      g.triangles.push_back({a, c, a + 1});
      g.triangles.push_back({a + 1, c, c + 1});
    }
  return g;
}

MeshGeometry make_uv_sphere(double radius, int slices, int stacks) {
  MeshGeometry g;
  g.name = "sphere";
  for (int j = 0; j <= stacks; ++j) {
    const double theta = std::numbers::pi * j / stacks;
    for (int i = 0; i <= slices; ++i) {
      const double phi = 2 * std::numbers::pi * i / slices;
      const Vec3 n{std::sin(theta) * std::cos(phi), std::cos(theta), std::sin(theta) * std::sin(phi)};
      g.vertices.push_back({n * radius, n, static_cast<double>(i) / slices, static_cast<double>(j) / stacks});
    }
  }
  for (int j = 0; j < stacks; ++j)
    for (int i = 0; i < slices; ++i) {
      const auto a = static_cast<std::uint32_t>(j * (slices + 1) + i);
      const auto c = a + static_cast<std::uint32_t>(slices + 1);
      if (j > 0) g.triangles.push_back({a, a + 1, c});
      if (j < stacks - 1) g.triangles.push_back({a + 1, c + 1, c});
    }
  return g;
}

MeshGeometry make_random_mesh(std::size_t triangles, std::uint64_t seed, double extent) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(-extent, extent), off(-0.15 * extent, 0.15 * extent);
  MeshGeometry g;
  g.name = "random";
  for (std::size_t t = 0; t < triangles; ++t) {
    const Vec3 c{pos(rng), pos(rng), pos(rng)};
    const auto base = static_cast<std::uint32_t>(g.vertices.size());
    for (int k = 0; k < 3; ++k) g.vertices.push_back({c + Vec3{off(rng), off(rng), off(rng)}, {0, 0, 1}, 0, 0});
    g.triangles.push_back({base, base + 1, base + 2});
  }
  generate_normals(g);
  return g;
}

std::uint32_t SceneBuilder::add_geometry(MeshGeometry g) {
  scene.geometries.push_back(std::move(g));
  return static_cast<std::uint32_t>(scene.geometries.size() - 1);
}

std::uint32_t SceneBuilder::add_material(Rgb color, double metallic, double roughness) {
  MaterialPbr m;
  m.name = "mat" + std::to_string(scene.materials.size());
  m.base_color = color;
  m.metallic = metallic;
  m.roughness = roughness;
  m.material_id = static_cast<std::uint32_t>(scene.materials.size());
  scene.materials.push_back(m);
  return m.material_id;
}

std::uint32_t SceneBuilder::add_mesh_node(const std::string& name, std::uint32_t geometry, std::uint32_t material,
                                          const Mat4& local) {
  SceneNode n;
  n.name = name;
  n.local = local;
  n.mesh_instance = MeshInstance{geometry, material};
  scene.nodes.push_back(n);
  return static_cast<std::uint32_t>(scene.nodes.size() - 1);
}

std::uint32_t SceneBuilder::add_camera(const std::string& name, const Mat4& local, double fov, double znear,
                                       double zfar) {
  SceneNode n;
  n.name = name;
  n.local = local;
  scene.nodes.push_back(n);
  Camera c;
  c.name = name;
  c.node = static_cast<std::uint32_t>(scene.nodes.size() - 1);
  c.vertical_fov = fov;
  c.znear = znear;
  c.zfar = zfar;
  scene.cameras.push_back(c);
  return *c.node;
}

void SceneBuilder::add_light(const std::string& name, Vec3 position, Rgb intensity) {
  PointLight l;
  l.name = name;
  l.position = position;
  l.intensity = intensity;
  scene.lights.push_back(l);
}

Scene SceneBuilder::finish() {
  update_world_transforms(scene);
  validate_scene(scene);
  return scene;
}

Mat4 look_at(Vec3 eye, Vec3 target) {
  const Vec3 f = normalize(target - eye);
  Vec3 up{0, 1, 0};
  if (std::abs(dot(f, up)) > 0.999) up = {0, 0, -1};
  const Vec3 r = normalize(cross(f, up));
  const Vec3 u = cross(r, f);
  Mat4 m;
  m.at(0, 0) = r.x, m.at(1, 0) = r.y, m.at(2, 0) = r.z;
  m.at(0, 1) = u.x, m.at(1, 1) = u.y, m.at(2, 1) = u.z;
  m.at(0, 2) = -f.x, m.at(1, 2) = -f.y, m.at(2, 2) = -f.z;
  m.at(0, 3) = eye.x, m.at(1, 3) = eye.y, m.at(2, 3) = eye.z;
  return m;
}

EdgeScene make_edge_scene(int size) {
  // Edge line in view space at z = -1: through (-1, -0.3) and (1, 0.45).
  const double x0 = -1.0, y0 = -0.3, x1 = 1.0, y1 = 0.45;
  const double dx = x1 - x0, dy = y1 - y0;
  MeshGeometry g;
  g.name = "edge";
  auto vert = [](double x, double y) {
    Vertex v;
    v.position = {x, y, -1.0};
    v.normal = {0, 0, 1};
    return v;
  };
  g.vertices = {vert(x0 - 10 * dx, y0 - 10 * dy), vert(x1 + 10 * dx, y1 + 10 * dy), vert(0.0, -30.0)};
  g.triangles = {{0, 1, 2}};
  SceneBuilder b;
  const auto gi = b.add_geometry(g);
  b.add_mesh_node("edge", gi, b.add_material({1, 1, 1}, 0.0, 1.0));
  b.add_camera("cam", Mat4::identity(), std::numbers::pi / 2, 0.1, 10.0);
  b.add_light("key", {0, 0, 0}, {40, 40, 40});
  EdgeScene e;
  e.scene = b.finish();
  e.size = size;
  e.ax = (x0 + 1) * 0.5 * size;
  e.ay = (1 - y0) * 0.5 * size;
  e.bx = (x1 + 1) * 0.5 * size;
  e.by = (1 - y1) * 0.5 * size;
  return e;
}

double msaa_coverage_error(int msaa, int size) {
  const EdgeScene e = make_edge_scene(size);
  RenderConfig cfg;
  cfg.width = cfg.height = size;
  cfg.msaa = msaa;
  cfg.fxaa = false;
  cfg.shadows = false;
  cfg.record_sample_ids = true;
  cfg.workers = 1;
  const auto arena = pack_vertex_arena(e.scene);
  const auto draws = build_draw_list(e.scene);
  const HdrFramebuffer fb = main_pass(e.scene, nullptr, arena, draws, cfg);
  // The covered side is the one containing the triangle's third vertex,
  // which sits far below the edge (larger screen y).
  const bool positive = half_plane_pixel_area(0, size * 4.0, e.ax, e.ay, e.bx, e.by) > 0.5;
  double err = 0.0;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      int covered = 0;
      for (int s = 0; s < msaa; ++s) covered += fb.sample_id(x, y, s) >= 0 ? 1 : 0;
      const double area = positive ? half_plane_pixel_area(x, y, e.ax, e.ay, e.bx, e.by)
                                   : half_plane_pixel_area(x, y, e.bx, e.by, e.ax, e.ay);
      err += std::abs(static_cast<double>(covered) / msaa - area);
    }
  }
  return err / (static_cast<double>(size) * size);
}

Scene shadow_scene() {
  SceneBuilder b;
  const auto floor = b.add_geometry(make_floor(3.0, 12));
  const auto ball = b.add_geometry(make_uv_sphere(0.5, 96, 48));
  const auto m = b.add_material({0.8, 0.8, 0.8}, 0.0, 0.8);
  b.add_mesh_node("floor", floor, m);
  b.add_mesh_node("ball", ball, m, Mat4::translate({0, 1, 0}));
  b.add_camera("cam", look_at({0, 4, 4}, {0, 0, 0}), 0.9);
  b.add_light("key", {0, 3, 0}, {30, 30, 30});
  return b.finish();
}

int shadow_grid_disagreements() {
  const Scene s = shadow_scene();
  std::vector<Blas> blases;
  for (std::uint32_t g = 0; g < s.geometries.size(); ++g) blases.push_back(compact_blas(build_blas(s.geometries[g], g)));
  const Tlas tlas = build_tlas(blases, collect_instances(s));
  const std::array<double, 3> c{0, 1, 0}, light{0, 3, 0};
  const double r = 0.5;
  int bad = 0;
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      const double px = -0.9 + 0.2 * i, pz = -0.9 + 0.2 * j;
      // Segment p -> light against the sphere: |p + t d - c|^2 = r^2, t in (0, 1).
      const std::array<double, 3> d{light[0] - px, light[1], light[2] - pz};
      const std::array<double, 3> m{px - c[0], -c[1], pz - c[2]};
      const double qa = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
      const double qb = 2 * (m[0] * d[0] + m[1] * d[1] + m[2] * d[2]);
      const double qc = m[0] * m[0] + m[1] * m[1] + m[2] * m[2] - r * r;
      const double disc = qb * qb - 4 * qa * qc;
      bool shadowed = false;
      if (disc > 0) {
        const double t0 = (-qb - std::sqrt(disc)) / (2 * qa);
        shadowed = t0 > 0 && t0 < 1;
      }
      const int vis = shadow_visibility(tlas, {px, 0, pz}, {0, 1, 0}, {light[0], light[1], light[2]});
      if ((vis == 0) != shadowed) ++bad;
    }
  }
  return bad;
}

M4 m4_identity() {
  M4 r{};
  for (int i = 0; i < 4; ++i) r[i][i] = 1.0;
  return r;
}

M4 m4_mul(const M4& a, const M4& b) {
  M4 r{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k) r[i][j] += a[i][k] * b[k][j];
  return r;
}

M4 m4_translate(double x, double y, double z) {
  M4 r = m4_identity();
  r[0][3] = x;
  r[1][3] = y;
  r[2][3] = z;
  return r;
}

M4 m4_rot_x(double a) {
  M4 r = m4_identity();
  r[1][1] = std::cos(a), r[1][2] = -std::sin(a);
  r[2][1] = std::sin(a), r[2][2] = std::cos(a);
  return r;
}

M4 m4_rot_y(double a) {
  M4 r = m4_identity();
  r[0][0] = std::cos(a), r[0][2] = std::sin(a);
  r[2][0] = -std::sin(a), r[2][2] = std::cos(a);
  return r;
}

M4 m4_rot_z(double a) {
  M4 r = m4_identity();
  r[0][0] = std::cos(a), r[0][1] = -std::sin(a);
  r[1][0] = std::sin(a), r[1][1] = std::cos(a);
  return r;
}

M4 m4_from(const Mat4& m) {
  M4 r{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) r[i][j] = m.m[j * 4 + i];
  return r;
}

double m4_max_diff(const M4& a, const M4& b) {
  double d = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) d = std::max(d, std::abs(a[i][j] - b[i][j]));
  return d;
}

M4 stub_pose(std::uint64_t t, std::size_t k) {
  const double kd = static_cast<double>(k);
  return m4_mul(m4_translate(kd, 0, 0), m4_rot_z(0.1 * static_cast<double>(t) + kd));
}

Rgb shade_point_oracle(Vec3 p, Vec3 n, Vec3 eye, Vec3 light, Rgb intensity, Rgb base, double metallic,
                       double roughness) {
  auto norm = [](std::array<double, 3> a) {
    const double l = std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
    return std::array<double, 3>{a[0] / l, a[1] / l, a[2] / l};
  };
  auto dotp = [](std::array<double, 3> a, std::array<double, 3> b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; };
  const std::array<double, 3> tl{light.x - p.x, light.y - p.y, light.z - p.z};
  const double d2 = dotp(tl, tl);
  const auto L = norm(tl);
  const auto V = norm({eye.x - p.x, eye.y - p.y, eye.z - p.z});
  auto N = norm({n.x, n.y, n.z});
  if (dotp(N, V) < 0) N = {-N[0], -N[1], -N[2]};
  const auto H = norm({L[0] + V[0], L[1] + V[1], L[2] + V[2]});
  const double nl = dotp(N, L), nv = dotp(N, V), nh = dotp(N, H), hl = dotp(H, L);
  if (nl <= 0) return {};
  const double a = roughness * roughness;
  const double D = a * a / (std::numbers::pi * std::pow(nh * nh * (a * a - 1) + 1, 2));
  const double k = (a + 1) * (a + 1) / 8;
  const double G = nv / (nv * (1 - k) + k) * nl / (nl * (1 - k) + k);
  const std::array<double, 3> c{base.r, base.g, base.b}, I{intensity.r, intensity.g, intensity.b};
  std::array<double, 3> out{};
  for (int ch = 0; ch < 3; ++ch) {
    const double f0 = 0.04 * (1 - metallic) + c[ch] * metallic;
    const double F = f0 + (1 - f0) * std::pow(1 - hl, 5);
    const double spec = D * F * G / (4 * nv * nl);
    const double kd = (1 - F) * (1 - metallic);
    out[ch] = (kd * c[ch] / std::numbers::pi + spec) * I[ch] / d2 * nl;
  }
  return {out[0], out[1], out[2]};
}

double srgb_encode_oracle(double linear) {
  if (linear <= 0.0031308) return 12.92 * linear;
  return 1.055 * std::pow(linear, 1 / 2.4) - 0.055;
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j) + 1.0;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) ma += ra[i], mb += rb[i];
  ma /= n, mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

double half_plane_pixel_area(double px, double py, double ax, double ay, double bx, double by) {
  std::vector<std::array<double, 2>> poly = {{px, py}, {px + 1, py}, {px + 1, py + 1}, {px, py + 1}}, out;
  auto side = [&](const std::array<double, 2>& p) { return (bx - ax) * (p[1] - ay) - (by - ay) * (p[0] - ax); };
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % poly.size()];
    const double sp = side(p), sq = side(q);
    if (sp >= 0) out.push_back(p);
    if ((sp >= 0) != (sq >= 0)) {
      const double t = sp / (sp - sq);
      out.push_back({p[0] + (q[0] - p[0]) * t, p[1] + (q[1] - p[1]) * t});
    }
  }
  double area = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& p = out[i];
    const auto& q = out[(i + 1) % out.size()];
    area += p[0] * q[1] - q[0] * p[1];
  }
  return std::abs(area) * 0.5;
}

int staircase_metric(const LdrImage& img) {
  int jumps = 0;
  std::optional<int> prev;
  for (int y = 0; y < img.height; ++y) {
    std::optional<int> col;
    for (int x = 0; x + 1 < img.width; ++x)
      if (std::abs(luma(img.pixel(x + 1, y)) - luma(img.pixel(x, y))) > 0.5) {
        col = x;
        break;
      }
    if (col && prev && *col != *prev) ++jumps;
    prev = col;
  }
  return jumps;
}

// Moller-Trumbore written against plain arrays, independent of the library.
namespace {

std::optional<double> mt_intersect(const double o[3], const double d[3], const TriangleVerts& tri) {
  const double a[3] = {tri[0].x, tri[0].y, tri[0].z};
  double e1[3], e2[3], s[3];
  for (int i = 0; i < 3; ++i) {
    e1[i] = (i == 0 ? tri[1].x : i == 1 ? tri[1].y : tri[1].z) - a[i];
    e2[i] = (i == 0 ? tri[2].x : i == 1 ? tri[2].y : tri[2].z) - a[i];
    s[i] = o[i] - a[i];
  }
  auto cross = [](const double x[3], const double y[3], double r[3]) {
    r[0] = x[1] * y[2] - x[2] * y[1];
    r[1] = x[2] * y[0] - x[0] * y[2];
    r[2] = x[0] * y[1] - x[1] * y[0];
  };
  auto dotp = [](const double x[3], const double y[3]) { return x[0] * y[0] + x[1] * y[1] + x[2] * y[2]; };
  double p[3], q[3];
  cross(d, e2, p);
  const double det = dotp(e1, p);
  if (std::abs(det) < 1e-14) return std::nullopt;
  const double inv = 1.0 / det;
  const double u = dotp(s, p) * inv;
  if (u < 0.0 || u > 1.0) return std::nullopt;
  cross(s, e1, q);
  const double v = dotp(d, q) * inv;
  if (v < 0.0 || u + v > 1.0) return std::nullopt;
  const double t = dotp(e2, q) * inv;
  if (t <= 0.0) return std::nullopt;
  return t;
}

}  // namespace

std::optional<OracleHit> oracle_closest_hit(std::span<const WorldTriangle> tris, const Ray& ray) {
  const double o[3] = {ray.origin.x, ray.origin.y, ray.origin.z};
  const double d[3] = {ray.direction.x, ray.direction.y, ray.direction.z};
  std::optional<OracleHit> best;
  for (const auto& wt : tris) {
    const auto t = mt_intersect(o, d, wt.verts);
    if (t && *t < ray.t_max && (!best || *t < best->t)) best = OracleHit{*t, wt.instance_id, wt.triangle};
  }
  return best;
}

std::string sha256_hex(const std::vector<std::uint8_t>& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
  std::string out;
  char buf[3];
  for (unsigned i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    out += buf;
  }
  return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::string hex_dump(const std::uint8_t* data, std::size_t size) {
  std::string out;
  char buf[16];
  for (std::size_t i = 0; i < size; i += 16) {
    std::snprintf(buf, sizeof buf, "%08zx:", i);
    out += buf;
    for (std::size_t j = i; j < std::min(size, i + 16); ++j) {
      std::snprintf(buf, sizeof buf, " %02x", data[j]);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

ProcessResult run_process(const std::vector<std::string>& args) {
  const auto dir = std::filesystem::temp_directory_path();
  static int counter = 0;
  const std::string tag = std::to_string(getpid()) + "-" + std::to_string(counter++);
  const auto out_path = dir / ("simrender-proc-" + tag + ".out");
  const auto err_path = dir / ("simrender-proc-" + tag + ".err");

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, 1, out_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  posix_spawn_file_actions_addopen(&actions, 2, err_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  std::vector<std::string> copy = args;
  std::vector<char*> argv;
  for (auto& a : copy) argv.push_back(a.data());
  argv.push_back(nullptr);

  ProcessResult result;
  pid_t pid = -1;
  if (posix_spawn(&pid, argv[0], &actions, nullptr, argv.data(), environ) == 0) {
    int status = 0;
    waitpid(pid, &status, 0);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
  }
  posix_spawn_file_actions_destroy(&actions);
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
  };
  result.out = slurp(out_path);
  result.err = slurp(err_path);
  std::filesystem::remove(out_path);
  std::filesystem::remove(err_path);
  return result;
}

}  // namespace simtest
