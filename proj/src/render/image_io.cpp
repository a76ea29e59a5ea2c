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

#include <png.h>

#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>

#include "simrender/error.hpp"
#include "simrender/post.hpp"

namespace simrender {

ImageFormat format_for_path(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext == ".png" ? ImageFormat::kPng : ImageFormat::kPpm;
}

std::vector<std::uint8_t> encode_ppm(const LdrImage& img) {
  const std::string header = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.rgb.begin(), img.rgb.end());
  return out;
}

std::vector<std::uint8_t> encode_png(const LdrImage& img) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, img.rgb.data(), 0, nullptr))
    throw Error(ErrorCode::kIo, std::string("png encode failed: ") + image.message);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, img.rgb.data(), 0, nullptr))
    throw Error(ErrorCode::kIo, std::string("png encode failed: ") + image.message);
  out.resize(size);
  return out;
}

void write_image(const LdrImage& img, const std::filesystem::path& path, ImageFormat format) {
  const auto bytes = format == ImageFormat::kPng ? encode_png(img) : encode_ppm(img);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error(ErrorCode::kIo, "write to '" + path.string() + "' failed");
}

void write_image(const LdrImage& img, const std::filesystem::path& path) {
  write_image(img, path, format_for_path(path));
}

LdrImage decode_ppm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size() && (std::isspace(bytes[pos]) || bytes[pos] == '#')) {
      if (bytes[pos] == '#')
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      else
        ++pos;
    }
  };
  auto read_int = [&] {
    skip_space();
    long v = 0;
    const std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) v = v * 10 + (bytes[pos++] - '0');
    if (pos == start) throw Error(ErrorCode::kParse, "ppm: expected integer at byte " + std::to_string(pos));
    return v;
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') throw Error(ErrorCode::kParse, "ppm: missing P6 magic");
  pos = 2;
  const long w = read_int(), h = read_int(), maxval = read_int();
  if (maxval != 255) throw Error(ErrorCode::kUnsupported, "ppm: maxval must be 255");
  ++pos;  // single whitespace before the raster
  const std::size_t need = static_cast<std::size_t>(w) * h * 3;
  if (bytes.size() - std::min(pos, bytes.size()) < need) throw Error(ErrorCode::kParse, "ppm: truncated raster");
  LdrImage img(static_cast<int>(w), static_cast<int>(h));
  std::memcpy(img.rgb.data(), bytes.data() + pos, need);
  return img;
}

LdrImage read_ppm(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_ppm(bytes);
}

}  // namespace simrender
