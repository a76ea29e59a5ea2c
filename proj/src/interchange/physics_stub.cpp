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
#include <chrono>
#include <thread>

#include "simrender/interchange.hpp"

namespace simrender {

std::vector<NamedTransform> physics_stub_step(std::uint64_t t, const std::vector<std::string>& roster) {
  std::vector<NamedTransform> out;
  out.reserve(roster.size());
  for (std::size_t k = 0; k < roster.size(); ++k) {
    const double kd = static_cast<double>(k);
    out.push_back({roster[k], Mat4::translate({kd, 0.0, 0.0}) * Mat4::rotate_z(0.1 * static_cast<double>(t) + kd)});
  }
  return out;
}

std::vector<std::string> mesh_node_roster(const Scene& scene) {
  std::vector<std::string> names;
  for (const auto& n : scene.nodes)
    if (n.mesh_instance) names.push_back(n.name);
  return names;
}

void run_physics_stub(const StubOptions& options, const std::atomic<bool>& stop) {
  using Clock = std::chrono::steady_clock;
  TableWriter writer = TableWriter::create(options.region, options.roster, options.reclaim);
  const auto period = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(1.0 / options.tick_hz));
  const auto start = Clock::now();
  for (std::uint64_t t = 0; !stop.load(); ++t) {
    writer.write_frame(physics_stub_step(t, options.roster));
    if (options.max_ticks != 0 && t + 1 >= options.max_ticks) break;
    const auto next = start + period * static_cast<Clock::rep>(t + 1);
    while (!stop.load() && Clock::now() < next)
      std::this_thread::sleep_for(std::min<Clock::duration>(next - Clock::now(), std::chrono::milliseconds(5)));
  }
}

}  // namespace simrender
