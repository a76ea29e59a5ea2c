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
#include <cstring>
#include <fstream>
#include <random>
#include <set>

#include "doctest.h"
#include "simrender/error.hpp"
#include "simrender/post.hpp"
#include "support.hpp"

using namespace simrender;

namespace {

LdrImage flat(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  LdrImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      img.pixel(x, y)[0] = r;
      img.pixel(x, y)[1] = g;
      img.pixel(x, y)[2] = b;
    }
  return img;
}

LdrImage render_edge(int size) {
  const auto e = simtest::make_edge_scene(size);
  RenderConfig cfg;
  cfg.width = cfg.height = size;
  cfg.msaa = 1;
  cfg.fxaa = false;
  cfg.shadows = false;
  return resolve_msaa(main_pass(e.scene, nullptr, pack_vertex_arena(e.scene), build_draw_list(e.scene), cfg));
}

bool is_white(const std::uint8_t* p) { return p[0] == 255 && p[1] == 255 && p[2] == 255; }
bool is_black(const std::uint8_t* p) { return p[0] == 0 && p[1] == 0 && p[2] == 0; }

}  // namespace

TEST_CASE("luma weights") {
  const std::uint8_t white[3] = {255, 255, 255}, red[3] = {255, 0, 0}, green[3] = {0, 255, 0};
  CHECK(luma(white) == doctest::Approx(1.0));
  CHECK(luma(red) == doctest::Approx(0.299));
  CHECK(luma(green) == doctest::Approx(0.587));
}

TEST_CASE("FXAA is a no-op on flat images") {
  std::mt19937 rng(4);
  for (int i = 0; i < 20; ++i) {
    const LdrImage img = flat(17, 9, rng() & 255, rng() & 255, rng() & 255);
    CHECK(fxaa_pass(img) == img);
  }
}

TEST_CASE("FXAA ignores contrast below the threshold") {
  LdrImage img = flat(8, 8, 100, 100, 100);
  for (int y = 0; y < 8; ++y)
    for (int x = 4; x < 8; ++x) std::memset(img.pixel(x, y), 103, 3);  // ~1.2% luma step
  CHECK(fxaa_pass(img) == img);
}

TEST_CASE("FXAA reduces the staircase on an aliased edge") {
  const LdrImage aliased = render_edge(64);
  const LdrImage smoothed = fxaa_pass(aliased);
  const int before = simtest::staircase_metric(aliased);
  const int after = simtest::staircase_metric(smoothed);
  CAPTURE(before);
  CAPTURE(after);
  CHECK(before > 0);
  CHECK(after < before);
}

TEST_CASE("FXAA copies the border and touches only edge pixels") {
  const LdrImage in = render_edge(48);
  const LdrImage out = fxaa_pass(in);
  for (int x = 0; x < in.width; ++x) {
    CHECK(std::memcmp(in.pixel(x, 0), out.pixel(x, 0), 3) == 0);
    CHECK(std::memcmp(in.pixel(x, in.height - 1), out.pixel(x, in.height - 1), 3) == 0);
  }
  for (int y = 0; y < in.height; ++y) {
    CHECK(std::memcmp(in.pixel(0, y), out.pixel(0, y), 3) == 0);
    CHECK(std::memcmp(in.pixel(in.width - 1, y), out.pixel(in.width - 1, y), 3) == 0);
  }
  int changed = 0;
  for (int y = 1; y + 1 < in.height; ++y)
    for (int x = 1; x + 1 < in.width; ++x) {
      if (std::memcmp(in.pixel(x, y), out.pixel(x, y), 3) == 0) continue;
      ++changed;
      // A changed pixel has a neighbour that differs strongly from it.
      const double c = luma(in.pixel(x, y));
      const double spread = std::max({std::abs(luma(in.pixel(x - 1, y)) - c), std::abs(luma(in.pixel(x + 1, y)) - c),
                                      std::abs(luma(in.pixel(x, y - 1)) - c), std::abs(luma(in.pixel(x, y + 1)) - c)});
      CHECK(spread >= kFxaaEdgeMin);
    }
  CHECK(changed > 0);
}

TEST_CASE("FXAA blend stays between the centre and its neighbours") {
  std::mt19937 rng(9);
  LdrImage img(32, 32);
  for (auto& b : img.rgb) b = (rng() & 1) ? 230 : 20;
  const LdrImage out = fxaa_pass(img);
  for (int y = 1; y < 31; ++y)
    for (int x = 1; x < 31; ++x)
      for (int c = 0; c < 3; ++c) {
        int lo = img.pixel(x, y)[c], hi = lo;
        for (auto [dx, dy] : {std::pair{1, 0}, std::pair{-1, 0}, std::pair{0, 1}, std::pair{0, -1}}) {
          lo = std::min<int>(lo, img.pixel(x + dx, y + dy)[c]);
          hi = std::max<int>(hi, img.pixel(x + dx, y + dy)[c]);
        }
        CHECK(out.pixel(x, y)[c] >= lo);
        CHECK(out.pixel(x, y)[c] <= hi);
      }
}

TEST_CASE("glyph table") {
  CHECK(glyph('a') == glyph('A'));
  CHECK(glyph('z') == glyph('Z'));
  CHECK(glyph('~') == glyph('?'));
  CHECK(glyph('\x01') == glyph('?'));
  const auto& space = glyph(' ');
  CHECK(std::all_of(space.begin(), space.end(), [](std::uint8_t r) { return r == 0; }));
  std::set<std::array<std::uint8_t, 8>> digits;
  for (char c = '0'; c <= '9'; ++c) digits.insert(glyph(c));
  CHECK(digits.size() == 10);
  for (char c : std::string("FMSCA:.,-")) {
    const auto& g = glyph(c);
    CHECK(std::any_of(g.begin(), g.end(), [](std::uint8_t r) { return r != 0; }));
  }
}

TEST_CASE("draw_text renders glyph bits white on black") {
  LdrImage img = flat(20, 12, 90, 90, 90);
  draw_text(img, "F1", 2, 1);
  for (int gy = 0; gy < kGlyphSize; ++gy)
    for (int gx = 0; gx < 2 * kGlyphSize; ++gx) {
      const char c = gx < kGlyphSize ? 'F' : '1';
      const bool on = (glyph(c)[gy] >> (7 - gx % kGlyphSize)) & 1;
      const auto* p = img.pixel(2 + gx, 1 + gy);
      CHECK((on ? is_white(p) : is_black(p)));
    }
  CHECK(img.pixel(0, 0)[0] == 90);
  CHECK(img.pixel(19, 11)[0] == 90);
  CHECK(img.pixel(18, 0)[0] == 90);
}

TEST_CASE("draw_text clips at the image edges") {
  LdrImage img = flat(10, 5, 1, 2, 3);
  draw_text(img, "HELLO WORLD", 3, 2);
  draw_text(img, "X", -4, -6);  // only rows 0..1 and columns 0..3 are visible
  CHECK(img.pixel(0, 3)[0] == 1);
  CHECK(img.pixel(2, 4)[2] == 3);
  CHECK(is_black(img.pixel(0, 0)));
  CHECK(is_white(img.pixel(1, 0)));
  CHECK(is_black(img.pixel(1, 1)));
  CHECK(img.pixel(4, 0)[0] == 1);
}

TEST_CASE("overlay text") {
  CHECK(format_overlay({12, 3.456, {1, -2, 0.5}}) == "F:12 3.46MS CAM 1.00,-2.00,0.50");
  LdrImage img = flat(400, 20, 50, 60, 70);
  const LdrImage before = img;
  overlay_pass(img, {3, 1.0, {0, 0, 0}});
  CHECK(img != before);
  for (int y = kGlyphSize; y < 20; ++y)
    for (int x = 0; x < 400; ++x) CHECK(std::memcmp(img.pixel(x, y), before.pixel(x, y), 3) == 0);
  const int text_px = static_cast<int>(format_overlay({3, 1.0, {0, 0, 0}}).size()) * kGlyphSize;
  for (int y = 0; y < kGlyphSize; ++y) CHECK(std::memcmp(img.pixel(text_px, y), before.pixel(text_px, y), 3) == 0);
}

TEST_CASE("PPM encoding is exact and round trips") {
  LdrImage img(3, 2);
  for (std::size_t i = 0; i < img.rgb.size(); ++i) img.rgb[i] = static_cast<std::uint8_t>(i * 13);
  const auto bytes = encode_ppm(img);
  const std::string header = "P6\n3 2\n255\n";
  REQUIRE(bytes.size() == header.size() + 18);
  CHECK(std::string(bytes.begin(), bytes.begin() + header.size()) == header);
  CHECK(std::equal(img.rgb.begin(), img.rgb.end(), bytes.begin() + header.size()));
  CHECK(decode_ppm(bytes) == img);

  const std::string commented = "P6\n# made by hand\n3 2\n# again\n255\n";
  std::vector<std::uint8_t> other(commented.begin(), commented.end());
  other.insert(other.end(), img.rgb.begin(), img.rgb.end());
  CHECK(decode_ppm(other) == img);
}

TEST_CASE("PPM decoding errors") {
  const std::string bad_magic = "P3\n1 1\n255\n000";
  CHECK_THROWS_AS(decode_ppm(std::vector<std::uint8_t>(bad_magic.begin(), bad_magic.end())), Error);
  const std::string truncated = "P6\n4 4\n255\nabc";
  CHECK_THROWS_AS(decode_ppm(std::vector<std::uint8_t>(truncated.begin(), truncated.end())), Error);
  const std::string deep = "P6\n1 1\n65535\n123456";
  CHECK_THROWS_AS(decode_ppm(std::vector<std::uint8_t>(deep.begin(), deep.end())), Error);
}

TEST_CASE("PNG output carries the signature and dimensions") {
  const LdrImage img = flat(300, 7, 10, 20, 30);
  const auto png = encode_png(img);
  REQUIRE(png.size() > 33);
  const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  CHECK(std::memcmp(png.data(), sig, 8) == 0);
  CHECK(std::memcmp(png.data() + 12, "IHDR", 4) == 0);
  const auto be32 = [&](std::size_t at) {
    return (std::uint32_t{png[at]} << 24) | (std::uint32_t{png[at + 1]} << 16) | (std::uint32_t{png[at + 2]} << 8) |
           png[at + 3];
  };
  CHECK(be32(16) == 300);
  CHECK(be32(20) == 7);
}

TEST_CASE("image files") {
  const auto dir = simtest::scratch_dir("post");
  const LdrImage img = flat(5, 4, 7, 8, 9);
  CHECK(format_for_path("a/b.png") == ImageFormat::kPng);
  CHECK(format_for_path("a/b.PNG") == ImageFormat::kPng);
  CHECK(format_for_path("a/b.ppm") == ImageFormat::kPpm);
  CHECK(format_for_path("a/b") == ImageFormat::kPpm);
  write_image(img, dir / "x.ppm");
  CHECK(read_ppm(dir / "x.ppm") == img);
  CHECK(simtest::read_file(dir / "x.ppm") == encode_ppm(img));
  write_image(img, dir / "x.png");
  CHECK(simtest::read_file(dir / "x.png") == encode_png(img));
  try {
    write_image(img, dir / "missing" / "deeper" / "x.ppm");
    FAIL("expected an I/O error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kIo);
    CHECK(std::string(e.what()).find("deeper") != std::string::npos);
  }
  CHECK_THROWS_AS(read_ppm(dir / "nope.ppm"), Error);
}
