#!/usr/bin/env python3
# Copyright (c) 2026, The simrender Authors.
# SPDX-License-Identifier: Apache-2.0
"""Writes table_2node.hex: the expected bytes of a two-node transform table.

Built with struct.pack only, independent of the C++ code. Scenario:
  create(["cube", "arm_link"])
  write {cube: translate(1.5, -2, 0.25), arm_link: scale(2, 0.5, 1)}
  write {arm_link: translate(-1, 0, 3) * scale(2, 0.5, 1)}
Two complete writes leave the generation at 4 and the lock free.
"""

import pathlib
import struct

MAGIC = 0x41564931
VERSION = 1


def translate(x, y, z):
    return [1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, x, y, z, 1]  # column-major


def record(name, matrix):
    raw = name.encode()
    return raw + b"\0" * (64 - len(raw)) + struct.pack("<16f", *matrix)


def table():
    header = struct.pack("<IIIIQ", MAGIC, VERSION, 2, 0, 4) + b"\0" * 40
    cube = translate(1.5, -2.0, 0.25)
    arm = [2, 0, 0, 0, 0, 0.5, 0, 0, 0, 0, 1, 0, -1, 0, 3, 1]
    return header + record("cube", cube) + record("arm_link", arm)


def hex_dump(data):
    lines = []
    for i in range(0, len(data), 16):
        lines.append("%08x:" % i + "".join(" %02x" % b for b in data[i:i + 16]))
    return "\n".join(lines) + "\n"


if __name__ == "__main__":
    out = pathlib.Path(__file__).with_name("table_2node.hex")
    out.write_text(hex_dump(table()))
