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

// Internal debug dump. Doubles are written with round-trip precision, so
// read_scene_dump(dump_scene(s)) == s.

#include <json.hpp>

#include "simrender/error.hpp"
#include "simrender/scene.hpp"

namespace simrender {

using nlohmann::json;

namespace {

json to_json(Vec3 v) { return json::array({v.x, v.y, v.z}); }
json to_json(Rgb c) { return json::array({c.r, c.g, c.b}); }
json to_json(const Mat4& m) { return json(m.m); }

Vec3 vec3_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }
Rgb rgb_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }
Mat4 mat4_from(const json& j) {
  Mat4 m;
  m.m = j.get<std::array<double, 16>>();
  return m;
}

template <typename T>
json optional_index(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

std::optional<std::uint32_t> optional_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<std::uint32_t>();
}

}  // namespace

std::string dump_scene(const Scene& scene) {
  json root;
  root["clear_color"] = to_json(scene.clear_color);

  json geometries = json::array();
  for (const auto& g : scene.geometries) {
    json verts = json::array();
    for (const auto& v : g.vertices)
      verts.push_back(json::array({v.position.x, v.position.y, v.position.z, v.normal.x, v.normal.y, v.normal.z, v.u, v.v}));
    geometries.push_back({{"name", g.name}, {"vertices", verts}, {"triangles", g.triangles}});
  }
  root["geometries"] = geometries;

  json materials = json::array();
  for (const auto& m : scene.materials)
    materials.push_back({{"name", m.name},
                         {"base_color", to_json(m.base_color)},
                         {"metallic", m.metallic},
                         {"roughness", m.roughness},
                         {"material_id", m.material_id}});
  root["materials"] = materials;

  json lights = json::array();
  for (const auto& l : scene.lights)
    lights.push_back({{"name", l.name},
                      {"position", to_json(l.position)},
                      {"intensity", to_json(l.intensity)},
                      {"node", optional_index(l.node)}});
  root["lights"] = lights;

  json cameras = json::array();
  for (const auto& c : scene.cameras)
    cameras.push_back({{"name", c.name},
                       {"node", optional_index(c.node)},
                       {"vertical_fov", c.vertical_fov},
                       {"znear", c.znear},
                       {"zfar", c.zfar}});
  root["cameras"] = cameras;

  json nodes = json::array();
  for (const auto& n : scene.nodes) {
    json jn = {{"name", n.name}, {"parent", optional_index(n.parent)}, {"local", to_json(n.local)}, {"world", to_json(n.world)}};
    jn["mesh_instance"] =
        n.mesh_instance ? json::array({n.mesh_instance->geometry, n.mesh_instance->material}) : json(nullptr);
    nodes.push_back(std::move(jn));
  }
  root["nodes"] = nodes;
  return root.dump(1);
}

Scene read_scene_dump(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, "scene dump parse error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  try {
    Scene scene;
    scene.clear_color = rgb_from(root.at("clear_color"));
    for (const auto& jg : root.at("geometries")) {
      MeshGeometry g;
      g.name = jg.at("name").get<std::string>();
      for (const auto& jv : jg.at("vertices")) {
        Vertex v;
        v.position = {jv.at(0).get<double>(), jv.at(1).get<double>(), jv.at(2).get<double>()};
        v.normal = {jv.at(3).get<double>(), jv.at(4).get<double>(), jv.at(5).get<double>()};
        v.u = jv.at(6).get<double>();
        v.v = jv.at(7).get<double>();
        g.vertices.push_back(v);
      }
      g.triangles = jg.at("triangles").get<std::vector<Triangle>>();
      scene.geometries.push_back(std::move(g));
    }
    for (const auto& jm : root.at("materials")) {
      MaterialPbr m;
      m.name = jm.at("name").get<std::string>();
      m.base_color = rgb_from(jm.at("base_color"));
      m.metallic = jm.at("metallic").get<double>();
      m.roughness = jm.at("roughness").get<double>();
      m.material_id = jm.at("material_id").get<std::uint32_t>();
      scene.materials.push_back(std::move(m));
    }
    for (const auto& jl : root.at("lights")) {
      PointLight l;
      l.name = jl.at("name").get<std::string>();
      l.position = vec3_from(jl.at("position"));
      l.intensity = rgb_from(jl.at("intensity"));
      l.node = optional_from(jl.at("node"));
      scene.lights.push_back(std::move(l));
    }
    for (const auto& jc : root.at("cameras")) {
      Camera c;
      c.name = jc.at("name").get<std::string>();
      c.node = optional_from(jc.at("node"));
      c.vertical_fov = jc.at("vertical_fov").get<double>();
      c.znear = jc.at("znear").get<double>();
      c.zfar = jc.at("zfar").get<double>();
      scene.cameras.push_back(std::move(c));
    }
    for (const auto& jn : root.at("nodes")) {
      SceneNode n;
      n.name = jn.at("name").get<std::string>();
      n.parent = optional_from(jn.at("parent"));
      n.local = mat4_from(jn.at("local"));
      n.world = mat4_from(jn.at("world"));
      if (const auto& mi = jn.at("mesh_instance"); !mi.is_null())
        n.mesh_instance = MeshInstance{mi.at(0).get<std::uint32_t>(), mi.at(1).get<std::uint32_t>()};
      scene.nodes.push_back(std::move(n));
    }
    return scene;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed scene dump: ") + e.what());
  }
}

}  // namespace simrender
