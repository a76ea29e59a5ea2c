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

// glTF 2.0 subset reader.
//
// Supported: nodes (matrix or TRS), triangle-list meshes with float32
// POSITION / NORMAL / TEXCOORD_0 and uint16 / uint32 indices, factor-only
// pbrMetallicRoughness materials, perspective cameras, and point lights from
// KHR_lights_punctual. Buffers are data: URIs or little-endian sidecar files.
// Anything else is an unsupported-feature error.

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "simrender/error.hpp"
#include "simrender/scene.hpp"

namespace simrender {

using nlohmann::json;

namespace {

static_assert(std::endian::native == std::endian::little, "buffer decoding assumes a little-endian host");

constexpr int kFloat = 5126;
constexpr int kUnsignedShort = 5123;
constexpr int kUnsignedInt = 5125;
constexpr int kModeTriangles = 4;
constexpr std::string_view kLightsExt = "KHR_lights_punctual";

[[noreturn]] void unsupported(const std::string& feature) {
  throw Error(ErrorCode::kUnsupported, "unsupported glTF feature: " + feature);
}

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::kValidation, what); }

std::vector<std::uint8_t> decode_base64(std::string_view in) {
  auto value = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+' || c == '-') return 62;
    if (c == '/' || c == '_') return 63;
    return -1;
  };
  std::vector<std::uint8_t> out;
  out.reserve(in.size() * 3 / 4);
  std::uint32_t acc = 0;
  int bits = 0;
  for (char c : in) {
    if (c == '=' || c == '\n' || c == '\r') continue;
    const int v = value(c);
    if (v < 0) throw Error(ErrorCode::kParse, "invalid base64 character in buffer URI");
    acc = (acc << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xFF));
    }
  }
  return out;
}

std::vector<std::uint8_t> load_buffer(const json& jb, std::size_t index, const std::filesystem::path& base_dir) {
  if (!jb.contains("uri")) unsupported("GLB-embedded buffer " + std::to_string(index));
  const auto uri = jb.at("uri").get<std::string>();
  std::vector<std::uint8_t> data;
  if (uri.rfind("data:", 0) == 0) {
    const auto comma = uri.find(',');
    if (comma == std::string::npos || uri.substr(0, comma).find(";base64") == std::string::npos)
      throw Error(ErrorCode::kParse, "buffer " + std::to_string(index) + " has a non-base64 data URI");
    data = decode_base64(std::string_view(uri).substr(comma + 1));
  } else {
    const auto path = base_dir / uri;
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::kIo, "cannot open buffer file " + path.string());
    data.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
  }
  const auto declared = jb.value("byteLength", std::size_t{0});
  if (data.size() < declared)
    invalid("buffer " + std::to_string(index) + " is shorter than its byteLength");
  return data;
}

class GltfReader {
 public:
  GltfReader(const json& doc, const std::filesystem::path& base_dir) : doc_(doc), base_dir_(base_dir) {}

  Scene read() {
    check_features();
    const auto& jnodes = array("nodes");
    for (std::size_t i = 0; i < jnodes.size(); ++i) {
      SceneNode node;
      node.name = jnodes[i].value("name", "node" + std::to_string(i));
      node.local = node_local(jnodes[i]);
      scene_.nodes.push_back(std::move(node));
    }
    link_children(jnodes);
    for (std::size_t i = 0; i < jnodes.size(); ++i) attach_resources(jnodes[i], static_cast<std::uint32_t>(i));
    if (const auto it = doc_.find("extras"); it != doc_.end() && it->contains("clear_color"))
      scene_.clear_color = clamp01(read_rgb(it->at("clear_color")));
    validate_scene(scene_);
    update_world_transforms(scene_);
    return std::move(scene_);
  }

 private:
  const json& array(const char* key) const {
    static const json empty = json::array();
    const auto it = doc_.find(key);
    return it == doc_.end() ? empty : *it;
  }

  void check_features() const {
    for (const char* key : {"extensionsRequired", "extensionsUsed"})
      for (const auto& ext : array(key))
        if (ext.get<std::string>() != kLightsExt) unsupported("extension " + ext.get<std::string>());
    if (!array("skins").empty()) unsupported("skinning");
    if (!array("animations").empty()) unsupported("animations");
    if (!array("textures").empty() || !array("images").empty()) unsupported("textures");
    if (doc_.contains("asset")) {
      const auto version = doc_["asset"].value("version", "2.0");
      if (version.rfind("2.", 0) != 0) unsupported("asset version " + version);
    }
  }

  static Rgb clamp01(Rgb c) {
    return {std::clamp(c.r, 0.0, 1.0), std::clamp(c.g, 0.0, 1.0), std::clamp(c.b, 0.0, 1.0)};
  }

  static Rgb read_rgb(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

  static Mat4 node_local(const json& jn) {
    if (jn.contains("matrix")) {
      Mat4 m;
      m.m = jn.at("matrix").get<std::array<double, 16>>();
      return m;
    }
    Mat4 t, r, s;
    if (jn.contains("translation")) {
      const auto& v = jn["translation"];
      t = Mat4::translate({v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>()});
    }
    if (jn.contains("rotation")) {
      const auto& q = jn["rotation"];
      r = Mat4::rotate_quat(q.at(0).get<double>(), q.at(1).get<double>(), q.at(2).get<double>(), q.at(3).get<double>());
    }
    if (jn.contains("scale")) {
      const auto& v = jn["scale"];
      s = Mat4::scale({v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>()});
    }
    return t * r * s;
  }

  void link_children(const json& jnodes) {
    for (std::size_t i = 0; i < jnodes.size(); ++i) {
      for (const auto& jc : jnodes[i].value("children", json::array())) {
        const auto c = jc.get<std::size_t>();
        if (c >= scene_.nodes.size())
          invalid("node '" + scene_.nodes[i].name + "' references child " + std::to_string(c) + " out of range");
        auto& child = scene_.nodes[c];
        if (child.parent || c == i)
          throw Error(ErrorCode::kStructural, "node '" + child.name + "' has more than one parent");
        child.parent = static_cast<std::uint32_t>(i);
      }
    }
  }

  void attach_resources(const json& jn, std::uint32_t index) {
    const std::string node_name = scene_.nodes[index].name;
    if (jn.contains("skin")) unsupported("skinning");
    if (jn.contains("weights")) unsupported("morph targets");
    if (jn.contains("camera")) {
      const auto ci = jn["camera"].get<std::size_t>();
      const auto& cams = array("cameras");
      if (ci >= cams.size()) invalid("node '" + node_name + "' references camera " + std::to_string(ci) + " out of range");
      scene_.cameras.push_back(read_camera(cams[ci], node_name, index));
    }
    if (const auto ext = jn.find("extensions"); ext != jn.end()) {
      for (const auto& [key, value] : ext->items()) {
        if (key != kLightsExt) unsupported("node extension " + key);
        const auto li = value.at("light").get<std::size_t>();
        const auto& lights = doc_.at("extensions").at(std::string(kLightsExt)).at("lights");
        if (li >= lights.size()) invalid("node '" + node_name + "' references light " + std::to_string(li) + " out of range");
        scene_.lights.push_back(read_light(lights[li], node_name, index));
      }
    }
    if (jn.contains("mesh")) {
      const auto mi = jn["mesh"].get<std::size_t>();
      const auto& meshes = array("meshes");
      if (mi >= meshes.size()) invalid("node '" + node_name + "' references mesh " + std::to_string(mi) + " out of range");
      const auto& prims = meshes[mi].at("primitives");
      for (std::size_t p = 0; p < prims.size(); ++p) {
        MeshInstance inst{geometry_for(mi, p, prims[p], node_name), material_for(prims[p], node_name)};
        if (p == 0) {
          scene_.nodes[index].mesh_instance = inst;
          continue;
        }
        // Extra primitives become identity children of the owning node.
        SceneNode extra;
        extra.name = node_name + "#p" + std::to_string(p);
        extra.parent = index;
        extra.mesh_instance = inst;
        scene_.nodes.push_back(std::move(extra));
      }
    }
  }

  static Camera read_camera(const json& jc, const std::string& node_name, std::uint32_t node) {
    const auto type = jc.value("type", "");
    if (type != "perspective") unsupported(type + " camera");
    const auto& p = jc.at("perspective");
    Camera cam;
    cam.name = jc.value("name", node_name);
    cam.node = node;
    cam.vertical_fov = p.at("yfov").get<double>();
    cam.znear = p.at("znear").get<double>();
    cam.zfar = p.value("zfar", cam.znear * 1.0e4);
    return cam;
  }

  static PointLight read_light(const json& jl, const std::string& node_name, std::uint32_t node) {
    const auto type = jl.value("type", "");
    if (type != "point") unsupported(type + " light");
    PointLight light;
    light.name = jl.value("name", node_name);
    light.node = node;
    const Rgb color = jl.contains("color") ? read_rgb(jl["color"]) : Rgb{1.0, 1.0, 1.0};
    const double intensity = jl.value("intensity", 1.0);
    light.intensity = {std::max(0.0, color.r * intensity), std::max(0.0, color.g * intensity),
                       std::max(0.0, color.b * intensity)};
    return light;
  }

  std::uint32_t material_for(const json& prim, const std::string& node_name) {
    if (!prim.contains("material")) {
      if (!default_material_) {
        MaterialPbr m;
        m.name = "default";
        m.material_id = static_cast<std::uint32_t>(scene_.materials.size());
        scene_.materials.push_back(m);
        default_material_ = m.material_id;
      }
      return *default_material_;
    }
    const auto index = prim["material"].get<std::size_t>();
    if (auto it = material_map_.find(index); it != material_map_.end()) return it->second;
    const auto& mats = array("materials");
    if (index >= mats.size()) invalid("node '" + node_name + "' references material " + std::to_string(index) + " out of range");
    const auto& jm = mats[index];
    for (const char* tex : {"normalTexture", "occlusionTexture", "emissiveTexture"})
      if (jm.contains(tex)) unsupported("textures");
    if (jm.contains("extensions")) unsupported("material extensions");
    MaterialPbr m;
    m.name = jm.value("name", "material" + std::to_string(index));
    if (const auto it = jm.find("pbrMetallicRoughness"); it != jm.end()) {
      if (it->contains("baseColorTexture") || it->contains("metallicRoughnessTexture")) unsupported("textures");
      if (it->contains("baseColorFactor")) m.base_color = clamp01(read_rgb(it->at("baseColorFactor")));
      m.metallic = std::clamp(it->value("metallicFactor", 1.0), 0.0, 1.0);
      m.roughness = std::clamp(it->value("roughnessFactor", 1.0), 0.0, 1.0);
    }
    m.material_id = static_cast<std::uint32_t>(scene_.materials.size());
    scene_.materials.push_back(m);
    material_map_.emplace(index, m.material_id);
    return m.material_id;
  }

  std::uint32_t geometry_for(std::size_t mesh, std::size_t prim_index, const json& prim, const std::string& node_name) {
    const auto key = std::make_pair(mesh, prim_index);
    if (auto it = geometry_map_.find(key); it != geometry_map_.end()) return it->second;

    if (prim.value("mode", kModeTriangles) != kModeTriangles) unsupported("non-triangle primitive mode");
    if (prim.contains("targets")) unsupported("morph targets");
    const auto& attrs = prim.at("attributes");
    for (const auto& [name, _] : attrs.items())
      if (name != "POSITION" && name != "NORMAL" && name != "TEXCOORD_0") unsupported("vertex attribute " + name);
    if (!attrs.contains("POSITION")) invalid("node '" + node_name + "' mesh primitive has no POSITION");

    // Primitives that differ only by material share one geometry.
    auto accessor_or = [](const json& j, const char* k) { return j.contains(k) ? j[k].get<long long>() : -1LL; };
    const std::array<long long, 4> source{accessor_or(attrs, "POSITION"), accessor_or(attrs, "NORMAL"),
                                          accessor_or(attrs, "TEXCOORD_0"), accessor_or(prim, "indices")};
    if (auto it = source_map_.find(source); it != source_map_.end()) {
      geometry_map_.emplace(key, it->second);
      return it->second;
    }

    MeshGeometry geo;
    geo.name = array("meshes")[mesh].value("name", "mesh" + std::to_string(mesh));
    if (prim_index > 0) geo.name += "#p" + std::to_string(prim_index);

    const auto positions = read_floats(attrs["POSITION"], 3, node_name);
    const std::size_t count = positions.size() / 3;
    geo.vertices.resize(count);
    for (std::size_t i = 0; i < count; ++i)
      geo.vertices[i].position = {positions[3 * i], positions[3 * i + 1], positions[3 * i + 2]};

    const bool has_normals = attrs.contains("NORMAL");
    if (has_normals) {
      const auto normals = read_floats(attrs["NORMAL"], 3, node_name);
      if (normals.size() != positions.size()) invalid("node '" + node_name + "' NORMAL count differs from POSITION count");
      for (std::size_t i = 0; i < count; ++i) {
        const Vec3 n = normalize({normals[3 * i], normals[3 * i + 1], normals[3 * i + 2]});
        geo.vertices[i].normal = length(n) > 0.0 ? n : Vec3{0.0, 0.0, 1.0};
      }
    }
    if (attrs.contains("TEXCOORD_0")) {
      const auto uvs = read_floats(attrs["TEXCOORD_0"], 2, node_name);
      if (uvs.size() / 2 != count) invalid("node '" + node_name + "' TEXCOORD_0 count differs from POSITION count");
      for (std::size_t i = 0; i < count; ++i) {
        geo.vertices[i].u = std::clamp(uvs[2 * i], 0.0, 1.0);
        geo.vertices[i].v = std::clamp(uvs[2 * i + 1], 0.0, 1.0);
      }
    }

    std::vector<std::uint32_t> indices;
    if (prim.contains("indices")) {
      indices = read_indices(prim["indices"], node_name);
    } else {
      indices.resize(count);
      for (std::size_t i = 0; i < count; ++i) indices[i] = static_cast<std::uint32_t>(i);
    }
    if (indices.size() % 3 != 0 || indices.empty()) invalid("node '" + node_name + "' mesh primitive is not a triangle list");
    for (std::size_t i = 0; i < indices.size(); i += 3) {
      Triangle tri{indices[i], indices[i + 1], indices[i + 2]};
      for (auto v : tri)
        if (v >= count) invalid("node '" + node_name + "' triangle index " + std::to_string(v) + " out of range");
      geo.triangles.push_back(tri);
    }
    if (!has_normals) generate_normals(geo);

    const auto id = static_cast<std::uint32_t>(scene_.geometries.size());
    scene_.geometries.push_back(std::move(geo));
    geometry_map_.emplace(key, id);
    source_map_.emplace(source, id);
    return id;
  }

  struct AccessorView {
    const std::uint8_t* data = nullptr;
    std::size_t count = 0;
    std::size_t stride = 0;
    int component_type = 0;
  };

  AccessorView accessor(const json& index_json, std::size_t components, const std::string& node_name) {
    const auto index = index_json.get<std::size_t>();
    const auto& accessors = array("accessors");
    if (index >= accessors.size())
      invalid("node '" + node_name + "' references accessor " + std::to_string(index) + " out of range");
    const auto& ja = accessors[index];
    if (ja.contains("sparse")) unsupported("sparse accessors");
    if (!ja.contains("bufferView")) invalid("node '" + node_name + "' accessor " + std::to_string(index) + " has no bufferView");

    static const std::map<std::string, std::size_t> kTypeWidth{{"SCALAR", 1}, {"VEC2", 2}, {"VEC3", 3}, {"VEC4", 4}};
    const auto type = ja.at("type").get<std::string>();
    const auto width = kTypeWidth.find(type);
    if (width == kTypeWidth.end() || width->second != components)
      unsupported("accessor type " + type + " for this attribute");

    AccessorView view;
    view.component_type = ja.at("componentType").get<int>();
    view.count = ja.at("count").get<std::size_t>();
    const std::size_t component_size = view.component_type == kUnsignedShort ? 2 : 4;
    const std::size_t element = component_size * components;

    const auto bv_index = ja["bufferView"].get<std::size_t>();
    const auto& views = array("bufferViews");
    if (bv_index >= views.size())
      invalid("node '" + node_name + "' accessor " + std::to_string(index) + " references bufferView out of range");
    const auto& jv = views[bv_index];
    const auto buffer_index = jv.at("buffer").get<std::size_t>();
    const auto& buffer = buffer_bytes(buffer_index, node_name);
    const std::size_t view_offset = jv.value("byteOffset", std::size_t{0});
    const std::size_t view_length = jv.at("byteLength").get<std::size_t>();
    view.stride = jv.value("byteStride", element);
    const std::size_t offset = ja.value("byteOffset", std::size_t{0});
    if (view_offset + view_length > buffer.size() ||
        (view.count > 0 && offset + (view.count - 1) * view.stride + element > view_length))
      invalid("node '" + node_name + "' accessor " + std::to_string(index) + " exceeds its buffer");
    view.data = buffer.data() + view_offset + offset;
    return view;
  }

  std::vector<double> read_floats(const json& index, std::size_t components, const std::string& node_name) {
    const auto view = accessor(index, components, node_name);
    if (view.component_type != kFloat) unsupported("non-float32 vertex attribute");
    std::vector<double> out(view.count * components);
    for (std::size_t i = 0; i < view.count; ++i) {
      for (std::size_t c = 0; c < components; ++c) {
        std::uint32_t bits;
        std::memcpy(&bits, view.data + i * view.stride + c * 4, 4);
        out[i * components + c] = static_cast<double>(std::bit_cast<float>(bits));
      }
    }
    return out;
  }

  std::vector<std::uint32_t> read_indices(const json& index, const std::string& node_name) {
    const auto view = accessor(index, 1, node_name);
    std::vector<std::uint32_t> out(view.count);
    for (std::size_t i = 0; i < view.count; ++i) {
      const std::uint8_t* p = view.data + i * view.stride;
      if (view.component_type == kUnsignedShort)
        out[i] = static_cast<std::uint32_t>(p[0] | (p[1] << 8));
      else if (view.component_type == kUnsignedInt)
        out[i] = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                 (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
      else
        unsupported("index component type " + std::to_string(view.component_type));
    }
    return out;
  }

  const std::vector<std::uint8_t>& buffer_bytes(std::size_t index, const std::string& node_name) {
    if (auto it = buffers_.find(index); it != buffers_.end()) return it->second;
    const auto& jbuffers = array("buffers");
    if (index >= jbuffers.size()) invalid("node '" + node_name + "' references buffer " + std::to_string(index) + " out of range");
    return buffers_.emplace(index, load_buffer(jbuffers[index], index, base_dir_)).first->second;
  }

  const json& doc_;
  std::filesystem::path base_dir_;
  Scene scene_;
  std::optional<std::uint32_t> default_material_;
  std::map<std::size_t, std::uint32_t> material_map_;
  std::map<std::pair<std::size_t, std::size_t>, std::uint32_t> geometry_map_;
  std::map<std::array<long long, 4>, std::uint32_t> source_map_;
  std::map<std::size_t, std::vector<std::uint8_t>> buffers_;
};

}  // namespace

Scene parse_gltf_subset(std::string_view bytes, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, "glTF JSON parse error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::kParse, "glTF document is not a JSON object");
  try {
    return GltfReader(doc, base_dir).read();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kValidation, std::string("malformed glTF structure: ") + e.what());
  }
}

Scene load_gltf_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIo, "cannot open scene file " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_gltf_subset(ss.str(), path.parent_path());
}

}  // namespace simrender
