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

#include <cmath>
#include <cstdio>

#include "simrender/bench.hpp"
#include "simrender/error.hpp"
#include "simrender/frame_loop.hpp"

namespace simrender {

StageStats stage_stats(const std::vector<double>& samples) {
  StageStats s;
  if (samples.empty()) return s;
  for (double v : samples) s.mean += v;
  s.mean /= static_cast<double>(samples.size());
  if (samples.size() > 1) {
    double acc = 0.0;
    for (double v : samples) acc += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(acc / static_cast<double>(samples.size() - 1));
  }
  return s;
}

std::string bench_csv_row(const BenchRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%u,%zu,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f", r.doublings, r.triangles,
                r.tlas.mean, r.tlas.stddev, r.main.mean, r.main.stddev, r.post.mean, r.post.stddev, r.overlay.mean,
                r.overlay.stddev);
  return buf;
}

std::vector<BenchRecord> run_bench(const Scene& scene, const BenchOptions& options,
                                   const std::function<void(const BenchRecord&)>& on_row) {
  if (options.doublings < 1) throw Error(ErrorCode::kConfig, "doublings must be at least 1");
  if (options.frames < 5) throw Error(ErrorCode::kConfig, "at least 5 measured frames are required");
  if (scene.mesh_instance_count() == 0) throw Error(ErrorCode::kValidation, "scene has no meshes to benchmark");
  RenderConfig config = options.config;
  config.target_hz = 0.0;

  std::vector<BenchRecord> rows;
  for (unsigned d = 0; d <= options.doublings; ++d) {
    Renderer renderer(duplicate_scene_geometry(scene, d), config);
    std::vector<double> tlas, main, post, overlay;
    for (unsigned f = 0; f < options.warmup + options.frames; ++f) {
      renderer.render_frame();
      if (f < options.warmup) continue;
      const FrameTiming& t = renderer.last_timing();
      tlas.push_back(t.tlas_build_ms);
      main.push_back(t.main_pass_ms);
      post.push_back(t.post_process_ms);
      overlay.push_back(t.overlay_ms);
    }
    BenchRecord r;
    r.doublings = d;
    r.triangles = renderer.scene().triangle_count();
    r.tlas = stage_stats(tlas);
    r.main = stage_stats(main);
    r.post = stage_stats(post);
    r.overlay = stage_stats(overlay);
    rows.push_back(r);
    if (on_row) on_row(r);
  }
  return rows;
}

}  // namespace simrender
