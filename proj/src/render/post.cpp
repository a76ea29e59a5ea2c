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
#include <cstdio>

#include "simrender/post.hpp"

namespace simrender {

double luma(const std::uint8_t* rgb) {
  return (0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2]) / 255.0;
}

void fxaa_pass(const LdrImage& in, LdrImage& out) {
  out = in;
  const int w = in.width, h = in.height;
  if (w < 3 || h < 3) return;
  std::vector<double> l(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) l[static_cast<std::size_t>(y) * w + x] = luma(in.pixel(x, y));
  auto at = [&](int x, int y) { return l[static_cast<std::size_t>(y) * w + x]; };

  for (int y = 1; y < h - 1; ++y) {
    for (int x = 1; x < w - 1; ++x) {
      const double m = at(x, y), n = at(x, y - 1), s = at(x, y + 1), e = at(x + 1, y), wl = at(x - 1, y);
      const double hi = std::max({m, n, s, e, wl});
      const double lo = std::min({m, n, s, e, wl});
      const double contrast = hi - lo;
      if (contrast < std::max(kFxaaEdgeMin, kFxaaEdgeRel * hi)) continue;

      const double nw = at(x - 1, y - 1), ne = at(x + 1, y - 1), sw = at(x - 1, y + 1), se = at(x + 1, y + 1);
      const double edge_horz = std::abs(nw + sw - 2.0 * wl) + 2.0 * std::abs(n + s - 2.0 * m) + std::abs(ne + se - 2.0 * e);
      const double edge_vert = std::abs(nw + ne - 2.0 * n) + 2.0 * std::abs(wl + e - 2.0 * m) + std::abs(sw + se - 2.0 * s);

      int nx = x, ny = y;
      if (edge_horz >= edge_vert) {
        ny = std::abs(n - m) >= std::abs(s - m) ? y - 1 : y + 1;
      } else {
        nx = std::abs(wl - m) >= std::abs(e - m) ? x - 1 : x + 1;
      }
      const double avg4 = (n + s + e + wl) * 0.25;
      const double factor = std::clamp(std::abs(avg4 - m) / contrast, 0.0, kFxaaSubpixelCap);

      const std::uint8_t* c = in.pixel(x, y);
      const std::uint8_t* o = in.pixel(nx, ny);
      std::uint8_t* dst = out.pixel(x, y);
      for (int k = 0; k < 3; ++k)
        dst[k] = static_cast<std::uint8_t>(std::floor(c[k] + factor * (o[k] - c[k]) + 0.5));
    }
  }
}

LdrImage fxaa_pass(const LdrImage& in) {
  LdrImage out;
  fxaa_pass(in, out);
  return out;
}

std::string format_overlay(const OverlayStats& stats) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "F:%llu %.2fMS CAM %.2f,%.2f,%.2f", static_cast<unsigned long long>(stats.frame),
                stats.frame_ms, stats.camera.x, stats.camera.y, stats.camera.z);
  return buf;
}

void draw_text(LdrImage& img, std::string_view text, int x, int y) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    const int cx = x + static_cast<int>(i) * kGlyphSize;
    if (cx >= img.width) break;
    const auto& rows = glyph(text[i]);
    for (int r = 0; r < kGlyphSize; ++r) {
      const int py = y + r;
      if (py < 0 || py >= img.height) continue;
      for (int b = 0; b < kGlyphSize; ++b) {
        const int px = cx + b;
        if (px < 0 || px >= img.width) continue;
        const std::uint8_t v = (rows[r] & (0x80 >> b)) ? 255 : 0;
        std::uint8_t* p = img.pixel(px, py);
        p[0] = p[1] = p[2] = v;
      }
    }
  }
}

void overlay_pass(LdrImage& img, const OverlayStats& stats) { draw_text(img, format_overlay(stats)); }

}  // namespace simrender
