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

// Cook-Torrance microfacet specular (GGX distribution, Schlick Fresnel,
// Schlick-GGX geometry) with a Lambert diffuse lobe, plus the display
// transforms applied at the end of the main pass.
//
// Roughness convention: alpha = roughness^2 everywhere below.

#include <span>

#include "simrender/math.hpp"
#include "simrender/scene.hpp"

namespace simrender {

inline constexpr double kDielectricF0 = 0.04;
inline constexpr double kBrdfEpsilon = 1e-6;

/// Direction vectors for one BRDF evaluation. The halfway vector is always
/// derived from the two lobes, never supplied.
class BrdfParams {
 public:
  /// `to_light` and `to_viewer` are normalized on construction.
  BrdfParams(Vec3 normal, Vec3 to_light, Vec3 to_viewer, Rgb f0, double alpha);

  Vec3 normal() const { return n_; }
  Vec3 to_light() const { return wi_; }
  Vec3 to_viewer() const { return wo_; }
  Vec3 halfway() const { return h_; }
  Rgb f0() const { return f0_; }
  double alpha() const { return alpha_; }

 private:
  Vec3 n_, wi_, wo_, h_;
  Rgb f0_;
  double alpha_;
};

struct ShadingSample {
  Vec3 position;
  Vec3 normal;     // unit; flipped toward the viewer by shade_direct
  MaterialPbr material;
  Vec3 to_viewer;  // unit
};

struct LightVisibility {
  PointLight light;
  int visible = 1;  // 0 or 1
};

double ggx_ndf(double n_dot_h, double alpha);
Rgb fresnel_schlick(double cos_theta, Rgb f0);
double smith_g(double n_dot_v, double n_dot_l, double alpha);
Rgb cook_torrance_specular(const BrdfParams& p);
Rgb derive_f0(Rgb base_color, double metallic);
double roughness_to_alpha(double roughness);

/// Direct lighting from point lights with inverse-square falloff.
Rgb shade_direct(const ShadingSample& s, std::span<const LightVisibility> lights);

double srgb_to_linear(double c);
double linear_to_srgb(double c);
Rgb srgb_to_linear(Rgb c);
Rgb linear_to_srgb(Rgb c);

double reinhard_tonemap(double c);
Rgb reinhard_tonemap(Rgb c);

/// Tone map, then gamma encode: the per-fragment display transform.
Rgb to_display(Rgb linear);

}  // namespace simrender
