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

// Post-processing on the resolved display image: FXAA, the stats overlay,
// and image file output.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "simrender/math.hpp"
#include "simrender/render.hpp"

namespace simrender {

inline constexpr double kFxaaEdgeMin = 0.0312;
inline constexpr double kFxaaEdgeRel = 0.125;
inline constexpr double kFxaaSubpixelCap = 0.75;

double luma(const std::uint8_t* rgb);

/// Reads from `in`, writes every pixel of `out` (borders copied).
void fxaa_pass(const LdrImage& in, LdrImage& out);
LdrImage fxaa_pass(const LdrImage& in);

inline constexpr int kGlyphSize = 8;

/// Rows of the built-in glyph, MSB = leftmost pixel. Lowercase maps to
/// uppercase; unknown characters render as '?'.
const std::array<std::uint8_t, 8>& glyph(char c);

/// Draws `text` top-left, white on black, one 8x8 cell per character.
/// Clipped at the image edges.
void draw_text(LdrImage& img, std::string_view text, int x = 0, int y = 0);

struct OverlayStats {
  std::uint64_t frame = 0;
  double frame_ms = 0.0;
  Vec3 camera;
};

std::string format_overlay(const OverlayStats& stats);
void overlay_pass(LdrImage& img, const OverlayStats& stats);

enum class ImageFormat { kPpm, kPng };

/// Picks the format from the extension (.png -> PNG, anything else PPM).
ImageFormat format_for_path(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_ppm(const LdrImage& img);
std::vector<std::uint8_t> encode_png(const LdrImage& img);
void write_image(const LdrImage& img, const std::filesystem::path& path, ImageFormat format);
void write_image(const LdrImage& img, const std::filesystem::path& path);
/// Parses a binary P6 file with maxval 255.
LdrImage read_ppm(const std::filesystem::path& path);
LdrImage decode_ppm(std::span<const std::uint8_t> bytes);

}  // namespace simrender
