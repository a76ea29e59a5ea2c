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

#include "simrender/shading.hpp"

namespace simrender {

namespace {

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

// Smallest alpha kept away from zero so D stays finite for mirror-like inputs.
constexpr double kMinAlpha = 1e-4;

}  // namespace

BrdfParams::BrdfParams(Vec3 normal, Vec3 to_light, Vec3 to_viewer, Rgb f0, double alpha)
    : n_(normalize(normal)),
      wi_(normalize(to_light)),
      wo_(normalize(to_viewer)),
      h_(normalize(wi_ + wo_)),
      f0_(f0),
      alpha_(std::clamp(alpha, kMinAlpha, 1.0)) {}

double roughness_to_alpha(double roughness) {
  const double r = clamp01(roughness);
  return std::max(r * r, kMinAlpha);
}

double ggx_ndf(double n_dot_h, double alpha) {
  const double nh = clamp01(n_dot_h);
  const double a = std::clamp(alpha, kMinAlpha, 1.0);
  const double a2 = a * a;
  const double d = nh * nh * (a2 - 1.0) + 1.0;
  return a2 / (kPi * d * d);
}

Rgb fresnel_schlick(double cos_theta, Rgb f0) {
  const double m = 1.0 - clamp01(cos_theta);
  const double m5 = m * m * m * m * m;
  return {f0.r + (1.0 - f0.r) * m5, f0.g + (1.0 - f0.g) * m5, f0.b + (1.0 - f0.b) * m5};
}

double smith_g(double n_dot_v, double n_dot_l, double alpha) {
  if (n_dot_v <= 0.0 || n_dot_l <= 0.0) return 0.0;
  const double k = (alpha + 1.0) * (alpha + 1.0) / 8.0;
  auto g1 = [k](double x) { return x / (x * (1.0 - k) + k); };
  return g1(std::min(n_dot_v, 1.0)) * g1(std::min(n_dot_l, 1.0));
}

Rgb cook_torrance_specular(const BrdfParams& p) {
  const double n_dot_l = dot(p.normal(), p.to_light());
  const double n_dot_v = dot(p.normal(), p.to_viewer());
  if (n_dot_l <= 0.0 || n_dot_v <= 0.0) return {};
  const double d = ggx_ndf(dot(p.normal(), p.halfway()), p.alpha());
  const Rgb f = fresnel_schlick(dot(p.halfway(), p.to_light()), p.f0());
  const double g = smith_g(n_dot_v, n_dot_l, p.alpha());
  const double denom = std::max(4.0 * n_dot_v * n_dot_l, kBrdfEpsilon);
  return f * (d * g / denom);
}

Rgb derive_f0(Rgb base_color, double metallic) {
  const double m = clamp01(metallic);
  auto mix = [m](double c) { return clamp01(kDielectricF0 * (1.0 - m) + c * m); };
  return {mix(base_color.r), mix(base_color.g), mix(base_color.b)};
}

Rgb shade_direct(const ShadingSample& s, std::span<const LightVisibility> lights) {
  const Vec3 v = normalize(s.to_viewer);
  Vec3 n = normalize(s.normal);
  if (dot(n, v) < 0.0) n = -n;  // two-sided

  const auto& mat = s.material;
  const double alpha = roughness_to_alpha(mat.roughness);
  const Rgb f0 = derive_f0(mat.base_color, mat.metallic);
  const double metallic = clamp01(mat.metallic);

  Rgb out;
  for (const auto& lv : lights) {
    if (lv.visible == 0) continue;
    const Vec3 to_light = lv.light.position - s.position;
    const double dist2 = dot(to_light, to_light);
    if (!(dist2 > 0.0)) continue;
    const Vec3 l = to_light / std::sqrt(dist2);
    const double n_dot_l = dot(n, l);
    if (n_dot_l <= 0.0) continue;

    const BrdfParams params(n, l, v, f0, alpha);
    const Rgb f = fresnel_schlick(dot(params.halfway(), l), f0);
    const Rgb kd = Rgb{1.0 - f.r, 1.0 - f.g, 1.0 - f.b} * (1.0 - metallic);
    const Rgb diffuse = kd * mat.base_color / kPi;
    const Rgb specular = cook_torrance_specular(params);
    const Rgb irradiance = lv.light.intensity * (n_dot_l / dist2);
    out += (diffuse + specular) * irradiance;
  }
  return out;
}

double srgb_to_linear(double c) {
  c = clamp01(c);
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double linear_to_srgb(double c) {
  c = clamp01(c);
  return c <= 0.0031308 ? c * 12.92 : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}

Rgb srgb_to_linear(Rgb c) { return {srgb_to_linear(c.r), srgb_to_linear(c.g), srgb_to_linear(c.b)}; }
Rgb linear_to_srgb(Rgb c) { return {linear_to_srgb(c.r), linear_to_srgb(c.g), linear_to_srgb(c.b)}; }

double reinhard_tonemap(double c) {
  c = std::max(c, 0.0);
  return c / (1.0 + c);
}

Rgb reinhard_tonemap(Rgb c) { return {reinhard_tonemap(c.r), reinhard_tonemap(c.g), reinhard_tonemap(c.b)}; }

Rgb to_display(Rgb linear) { return linear_to_srgb(reinhard_tonemap(linear)); }

}  // namespace simrender
