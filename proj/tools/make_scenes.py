#!/usr/bin/env python3
# Copyright (c) 2026, The simrender Authors.
# SPDX-License-Identifier: Apache-2.0
"""Writes the bundled glTF scenes under assets/ (embedded base64 buffers)."""

import argparse
import base64
import json
import math
import pathlib
import struct


class Builder:
    def __init__(self):
        self.blob = bytearray()
        self.doc = {
            "asset": {"version": "2.0", "generator": "simrender make_scenes.py"},
            "scene": 0,
            "scenes": [{"nodes": []}],
            "nodes": [],
            "meshes": [],
            "materials": [],
            "accessors": [],
            "bufferViews": [],
            "buffers": [],
        }

    def _view(self, data, target):
        while len(self.blob) % 4:
            self.blob.append(0)
        offset = len(self.blob)
        self.blob.extend(data)
        self.doc["bufferViews"].append(
            {"buffer": 0, "byteOffset": offset, "byteLength": len(data), "target": target})
        return len(self.doc["bufferViews"]) - 1

    def _accessor(self, view, ctype, count, kind, lo=None, hi=None):
        acc = {"bufferView": view, "componentType": ctype, "count": count, "type": kind}
        if lo is not None:
            acc["min"], acc["max"] = lo, hi
        self.doc["accessors"].append(acc)
        return len(self.doc["accessors"]) - 1

    def mesh(self, name, positions, normals, uvs, triangles):
        pos = b"".join(struct.pack("<3f", *p) for p in positions)
        lo = [min(p[i] for p in positions) for i in range(3)]
        hi = [max(p[i] for p in positions) for i in range(3)]
        a_pos = self._accessor(self._view(pos, 34962), 5126, len(positions), "VEC3", lo, hi)
        a_nrm = self._accessor(self._view(b"".join(struct.pack("<3f", *n) for n in normals), 34962),
                               5126, len(normals), "VEC3")
        a_uv = self._accessor(self._view(b"".join(struct.pack("<2f", *t) for t in uvs), 34962),
                              5126, len(uvs), "VEC2")
        flat = [i for t in triangles for i in t]
        if len(positions) < 65536:
            idx, ctype = struct.pack("<%dH" % len(flat), *flat), 5123
        else:
            idx, ctype = struct.pack("<%dI" % len(flat), *flat), 5125
        a_idx = self._accessor(self._view(idx, 34963), ctype, len(flat), "SCALAR")
        self.doc["meshes"].append({"name": name, "primitives": [
            {"attributes": {"POSITION": a_pos, "NORMAL": a_nrm, "TEXCOORD_0": a_uv},
             "indices": a_idx, "material": 0}]})
        return len(self.doc["meshes"]) - 1

    def material(self, name, color, metallic, roughness):
        self.doc["materials"].append({"name": name, "pbrMetallicRoughness": {
            "baseColorFactor": list(color) + [1.0], "metallicFactor": metallic,
            "roughnessFactor": roughness}})
        return len(self.doc["materials"]) - 1

    def node(self, name, parent=None, **fields):
        node = {"name": name}
        node.update(fields)
        self.doc["nodes"].append(node)
        index = len(self.doc["nodes"]) - 1
        if parent is None:
            self.doc["scenes"][0]["nodes"].append(index)
        else:
            self.doc["nodes"][parent].setdefault("children", []).append(index)
        return index

    def mesh_node(self, name, mesh, material, parent=None, **fields):
        # Materials live on primitives; one mesh entry per (mesh, material) pair.
        key = (mesh, material)
        cache = self.__dict__.setdefault("_variants", {})
        if key not in cache:
            src = self.doc["meshes"][mesh]
            prim = dict(src["primitives"][0], material=material)
            self.doc["meshes"].append({"name": "%s_m%d" % (src["name"], material), "primitives": [prim]})
            cache[key] = len(self.doc["meshes"]) - 1
        return self.node(name, parent, mesh=cache[key], **fields)

    def camera(self, name, yfov, znear, zfar, **fields):
        self.doc.setdefault("cameras", []).append(
            {"type": "perspective", "perspective": {"yfov": yfov, "znear": znear, "zfar": zfar}})
        return self.node(name, camera=len(self.doc["cameras"]) - 1, **fields)

    def light(self, name, color, intensity, translation):
        ext = self.doc.setdefault("extensions", {}).setdefault("KHR_lights_punctual", {"lights": []})
        ext["lights"].append({"type": "point", "color": list(color), "intensity": intensity})
        self.doc["extensionsUsed"] = ["KHR_lights_punctual"]
        return self.node(name, translation=list(translation),
                         extensions={"KHR_lights_punctual": {"light": len(ext["lights"]) - 1}})

    def finish(self, clear_color):
        self.doc["extras"] = {"clear_color": list(clear_color)}
        self.doc["buffers"] = [{"byteLength": len(self.blob),
                                "uri": "data:application/octet-stream;base64,"
                                       + base64.b64encode(bytes(self.blob)).decode()}]
        # Unused source meshes stay referenced-free; drop nothing to keep indices stable.
        return json.dumps(self.doc, indent=1) + "\n"


def plane(size, cells):
    pos, nrm, uv, tri = [], [], [], []
    for j in range(cells + 1):
        for i in range(cells + 1):
            u, v = i / cells, j / cells
            pos.append(((u - 0.5) * size, 0.0, (v - 0.5) * size))
            nrm.append((0.0, 1.0, 0.0))
            uv.append((u, v))
    for j in range(cells):
        for i in range(cells):
            a = j * (cells + 1) + i
            b, c, d = a + 1, a + cells + 1, a + cells + 2
            tri += [(a, c, b), (b, c, d)]
    return pos, nrm, uv, tri


def sphere(radius, slices, stacks, center=(0.0, 0.0, 0.0)):
    pos, nrm, uv, tri = [], [], [], []
    for j in range(stacks + 1):
        theta = math.pi * j / stacks
        for i in range(slices + 1):
            phi = 2 * math.pi * i / slices
            n = (math.sin(theta) * math.cos(phi), math.cos(theta), math.sin(theta) * math.sin(phi))
            pos.append(tuple(center[k] + radius * n[k] for k in range(3)))
            nrm.append(n)
            uv.append((i / slices, j / stacks))
    for j in range(stacks):
        for i in range(slices):
            a = j * (slices + 1) + i
            b, c, d = a + 1, a + slices + 1, a + slices + 2
            if j > 0:
                tri.append((a, b, c))
            if j < stacks - 1:
                tri.append((b, d, c))
    return pos, nrm, uv, tri


def box(half, center=(0.0, 0.0, 0.0)):
    pos, nrm, uv, tri = [], [], [], []
    for axis in range(3):
        for sign in (-1.0, 1.0):
            n = [0.0, 0.0, 0.0]
            n[axis] = sign
            u_axis, v_axis = (axis + 1) % 3, (axis + 2) % 3
            base = len(pos)
            for (su, sv) in ((-1, -1), (1, -1), (1, 1), (-1, 1)):
                p = [0.0, 0.0, 0.0]
                p[axis] = sign * half[axis]
                p[u_axis] = su * half[u_axis]
                p[v_axis] = sv * half[v_axis]
                pos.append(tuple(center[k] + p[k] for k in range(3)))
                nrm.append(tuple(n))
                uv.append(((su + 1) / 2, (sv + 1) / 2))
            if sign > 0:
                tri += [(base, base + 1, base + 2), (base, base + 2, base + 3)]
            else:
                tri += [(base, base + 2, base + 1), (base, base + 3, base + 2)]
    return pos, nrm, uv, tri


def cylinder(radius, height, slices):
    pos, nrm, uv, tri = [], [], [], []
    for i in range(slices + 1):
        phi = 2 * math.pi * i / slices
        n = (math.cos(phi), 0.0, math.sin(phi))
        for y in (0.0, height):
            pos.append((radius * n[0], y, radius * n[2]))
            nrm.append(n)
            uv.append((i / slices, y / height))
    for i in range(slices):
        a = 2 * i
        tri += [(a, a + 1, a + 2), (a + 1, a + 3, a + 2)]
    for y, ny in ((0.0, -1.0), (height, 1.0)):
        center = len(pos)
        pos.append((0.0, y, 0.0))
        nrm.append((0.0, ny, 0.0))
        uv.append((0.5, 0.5))
        ring = len(pos)
        for i in range(slices):
            phi = 2 * math.pi * i / slices
            pos.append((radius * math.cos(phi), y, radius * math.sin(phi)))
            nrm.append((0.0, ny, 0.0))
            uv.append((0.5 + 0.5 * math.cos(phi), 0.5 + 0.5 * math.sin(phi)))
        for i in range(slices):
            a, b = ring + i, ring + (i + 1) % slices
            tri.append((center, b, a) if ny > 0 else (center, a, b))
    return pos, nrm, uv, tri


def look_at_quat(eye, target):
    # Camera looks down its local -Z; build the rotation taking -Z to (target - eye).
    f = [target[i] - eye[i] for i in range(3)]
    fl = math.sqrt(sum(c * c for c in f))
    f = [c / fl for c in f]
    up = (0.0, 1.0, 0.0)
    r = [f[1] * up[2] - f[2] * up[1], f[2] * up[0] - f[0] * up[2], f[0] * up[1] - f[1] * up[0]]
    rl = math.sqrt(sum(c * c for c in r))
    r = [c / rl for c in r]
    u = [r[1] * f[2] - r[2] * f[1], r[2] * f[0] - r[0] * f[2], r[0] * f[1] - r[1] * f[0]]
    m = [[r[0], u[0], -f[0]], [r[1], u[1], -f[1]], [r[2], u[2], -f[2]]]
    tr = m[0][0] + m[1][1] + m[2][2]
    if tr > 0:
        s = math.sqrt(tr + 1.0) * 2
        return [(m[2][1] - m[1][2]) / s, (m[0][2] - m[2][0]) / s, (m[1][0] - m[0][1]) / s, 0.25 * s]
    if m[0][0] > m[1][1] and m[0][0] > m[2][2]:
        s = math.sqrt(1.0 + m[0][0] - m[1][1] - m[2][2]) * 2
        return [0.25 * s, (m[0][1] + m[1][0]) / s, (m[0][2] + m[2][0]) / s, (m[2][1] - m[1][2]) / s]
    if m[1][1] > m[2][2]:
        s = math.sqrt(1.0 + m[1][1] - m[0][0] - m[2][2]) * 2
        return [(m[0][1] + m[1][0]) / s, 0.25 * s, (m[1][2] + m[2][1]) / s, (m[0][2] - m[2][0]) / s]
    s = math.sqrt(1.0 + m[2][2] - m[0][0] - m[1][1]) * 2
    return [(m[0][2] + m[2][0]) / s, (m[1][2] + m[2][1]) / s, 0.25 * s, (m[1][0] - m[0][1]) / s]


def triangle_scene():
    b = Builder()
    b.material("white", (0.8, 0.8, 0.8), 0.0, 1.0)
    mesh = b.mesh("triangle", [(-0.5, -0.5, 0.0), (0.5, -0.5, 0.0), (0.0, 0.5, 0.0)],
                  [(0.0, 0.0, 1.0)] * 3, [(0.0, 0.0), (1.0, 0.0), (0.5, 1.0)], [(0, 1, 2)])
    b.mesh_node("triangle", mesh, 0)
    b.camera("camera", 0.8, 0.1, 100.0, translation=[0.0, 0.0, 2.0])
    b.light("key", (1.0, 1.0, 1.0), 4.0, (0.0, 0.0, 2.0))
    return b.finish((0.05, 0.05, 0.08))


def bench_scene():
    b = Builder()
    floor_m = b.material("floor", (0.6, 0.6, 0.55), 0.0, 0.9)
    red = b.material("red", (0.8, 0.1, 0.1), 0.0, 0.4)
    gold = b.material("gold", (1.0, 0.78, 0.34), 1.0, 0.3)
    blue = b.material("blue", (0.1, 0.2, 0.8), 0.0, 0.6)
    green = b.material("green", (0.2, 0.7, 0.2), 0.5, 0.5)

    ground = b.mesh("ground", *plane(6.0, 16))
    ball = b.mesh("ball", *sphere(0.3, 20, 12))
    crate = b.mesh("crate", *box((0.2, 0.2, 0.2)))
    post = b.mesh("post", *cylinder(0.1, 0.8, 16))

    b.mesh_node("ground", ground, floor_m)
    table = b.node("table", translation=[0.0, 0.0, 0.0])
    mats = [red, gold, blue, green]
    for i in range(4):
        angle = 2 * math.pi * i / 4
        b.mesh_node("ball_%d" % i, ball, mats[i], parent=table,
                    translation=[1.4 * math.cos(angle), 0.3, 1.4 * math.sin(angle)])
    for i in range(8):
        angle = 2 * math.pi * (i + 0.5) / 8
        b.mesh_node("crate_%d" % i, crate, mats[(i + 1) % 4], parent=table,
                    translation=[2.2 * math.cos(angle), 0.2, 2.2 * math.sin(angle)],
                    rotation=[0.0, math.sin(angle / 2), 0.0, math.cos(angle / 2)])
    for i in range(4):
        angle = 2 * math.pi * i / 4 + math.pi / 4
        b.mesh_node("post_%d" % i, post, mats[(i + 2) % 4], parent=table,
                    translation=[0.7 * math.cos(angle), 0.0, 0.7 * math.sin(angle)])
    eye = (0.0, 4.5, 5.5)
    b.camera("camera", 0.9, 0.1, 50.0, translation=list(eye), rotation=look_at_quat(eye, (0.0, 0.0, 0.0)))
    b.light("key", (1.0, 0.95, 0.9), 30.0, (2.0, 4.0, 2.0))
    b.light("fill", (0.6, 0.7, 1.0), 10.0, (-3.0, 3.0, -1.0))
    return b.finish((0.1, 0.12, 0.16))


def demo_scene():
    b = Builder()
    b.material("cube", (0.9, 0.5, 0.1), 0.0, 0.8)
    # Cube centred one metre from its node origin so rotations about Z move it on a circle.
    cube = b.mesh("cube", *box((0.25, 0.25, 0.25), center=(1.0, 0.0, 0.0)))
    b.mesh_node("cube", cube, 0)
    # Distant, narrow camera: close to orthographic so the cube's image centroid
    # tracks the projection of its centre.
    b.camera("camera", 0.08, 1.0, 200.0, translation=[0.0, 0.0, 60.0])
    b.light("key", (1.0, 1.0, 1.0), 2500.0, (0.0, 0.0, 50.0))
    return b.finish((0.0, 0.0, 0.0))


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "assets"))
    args = parser.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, fn in (("triangle.gltf", triangle_scene), ("bench.gltf", bench_scene), ("demo_cube.gltf", demo_scene)):
        (out / name).write_text(fn())
        print("wrote", out / name)


if __name__ == "__main__":
    main()
