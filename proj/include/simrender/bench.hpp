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

// Scaling benchmark: duplicate the scene's meshes 2^d times for d = 0..K and
// time each frame stage.

#include <functional>
#include <string>
#include <vector>

#include "simrender/render.hpp"
#include "simrender/scene.hpp"

namespace simrender {

struct BenchOptions {
  unsigned doublings = 5;  // K, at least 1
  unsigned frames = 5;     // measured frames per row, at least 5
  unsigned warmup = 3;
  RenderConfig config = [] {
    RenderConfig c;
    c.overlay = true;
    return c;
  }();
};

struct StageStats {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation
};

struct BenchRecord {
  unsigned doublings = 0;
  std::size_t triangles = 0;
  StageStats tlas, main, post, overlay;
};

inline constexpr const char* kBenchCsvHeader =
    "doublings,triangles,tlas_mean_ms,tlas_std,main_mean_ms,main_std,post_mean_ms,post_std,overlay_mean_ms,overlay_std";

StageStats stage_stats(const std::vector<double>& samples);
std::string bench_csv_row(const BenchRecord& r);

/// Throws kConfig for K < 1 or M < 5, kValidation for a scene without meshes.
std::vector<BenchRecord> run_bench(const Scene& scene, const BenchOptions& options,
                                   const std::function<void(const BenchRecord&)>& on_row = {});

}  // namespace simrender
