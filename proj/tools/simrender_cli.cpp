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

// simrender-cli: render, bench, interchange-demo (plus debug dumps and the
// physics-stub process used by the demo).
//
// Exit codes: 0 success, 1 runtime error, 2 usage error.

#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "simrender/simrender.h"

extern char** environ;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct RuntimeFailure {
  std::string message;
};

void check(sr_status status, const std::string& what) {
  if (status != SR_OK) throw RuntimeFailure{what + ": " + sr_last_error()};
}

struct SceneHandle {
  sr_scene* p = nullptr;
  explicit SceneHandle(const std::string& path) { check(sr_scene_load(path.c_str(), &p), "cannot load scene"); }
  ~SceneHandle() { sr_scene_free(p); }
};

struct RendererHandle {
  sr_renderer* p = nullptr;
  RendererHandle(const sr_scene* scene, const sr_render_config& config) {
    check(sr_renderer_create(scene, &config, &p), "cannot create renderer");
  }
  ~RendererHandle() { sr_renderer_destroy(p); }
};

bool parse_switch(const std::string& v) { return v == "on"; }

// PATH with .ppm/.png: exact path for a single frame, STEM-frame-NNNN.EXT otherwise.
// PATH without an extension: PATH-frame-NNNN.ppm.
std::string output_path(const std::string& out, std::uint64_t frame, std::uint64_t frames) {
  std::filesystem::path p(out);
  const std::string ext = p.extension().string();
  char suffix[32];
  std::snprintf(suffix, sizeof suffix, "-frame-%04llu", static_cast<unsigned long long>(frame));
  if (ext == ".ppm" || ext == ".png") {
    if (frames == 1) return out;
    return (p.parent_path() / (p.stem().string() + suffix + ext)).string();
  }
  return out + suffix + ".ppm";
}

struct RenderFlags {
  std::string scene;
  std::string out = "out";
  int width = 256;
  int height = 256;
  int msaa = 4;
  std::string fxaa = "on";
  std::string shadows = "on";
  std::string overlay = "off";
  std::string camera;
  std::uint64_t frames = 1;
  unsigned workers = 0;
  double target_hz = 0.0;
  std::string timing;
  std::string backface = "off";
  std::string frustum = "off";
};

void add_render_flags(CLI::App* cmd, RenderFlags& f, bool with_frames) {
  cmd->add_option("--scene", f.scene, "glTF scene file")->required();
  cmd->add_option("--width", f.width, "Image width")->check(CLI::Range(1, 16384));
  cmd->add_option("--height", f.height, "Image height")->check(CLI::Range(1, 16384));
  cmd->add_option("--msaa", f.msaa, "Samples per pixel")->check(CLI::IsMember({1, 2, 4, 8}));
  cmd->add_option("--fxaa", f.fxaa, "on|off")->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--shadows", f.shadows, "on|off")->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--overlay", f.overlay, "on|off")->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--backface-culling", f.backface, "on|off")->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--frustum-culling", f.frustum, "on|off")->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--camera", f.camera, "Camera or camera node name");
  cmd->add_option("--workers", f.workers, "Raster worker threads (0 = all cores)");
  if (with_frames) cmd->add_option("--frames", f.frames, "Frames to render")->check(CLI::PositiveNumber);
}

sr_render_config make_config(const RenderFlags& f) {
  sr_render_config c;
  sr_render_config_default(&c);
  c.width = f.width;
  c.height = f.height;
  c.msaa = f.msaa;
  c.fxaa = parse_switch(f.fxaa);
  c.shadows = parse_switch(f.shadows);
  c.overlay = parse_switch(f.overlay);
  c.backface_culling = parse_switch(f.backface);
  c.frustum_culling = parse_switch(f.frustum);
  c.workers = f.workers;
  c.target_hz = f.target_hz;
  c.camera = f.camera.empty() ? nullptr : f.camera.c_str();
  return c;
}

std::string timing_row(const sr_frame_info& info) {
  char buf[256];
  sr_timing_csv_row(&info, buf, sizeof buf);
  return buf;
}

int cmd_render(const RenderFlags& f) {
  SceneHandle scene(f.scene);
  const sr_render_config config = make_config(f);
  RendererHandle renderer(scene.p, config);
  std::ofstream timing;
  if (!f.timing.empty()) {
    timing.open(f.timing);
    if (!timing) throw RuntimeFailure{"cannot open timing file '" + f.timing + "'"};
    timing << sr_timing_csv_header() << '\n';
  }
  for (std::uint64_t i = 0; i < f.frames; ++i) {
    sr_frame_info info;
    check(sr_renderer_render_frame(renderer.p, nullptr, &info), "render failed");
    const std::string path = output_path(f.out, i, f.frames);
    check(sr_renderer_write_image(renderer.p, path.c_str()), "cannot write image");
    if (timing.is_open()) timing << timing_row(info) << '\n';
  }
  size_t registered = 0, ran = 0;
  check(sr_renderer_shutdown(renderer.p, &registered, &ran), "shutdown failed");
  if (registered != ran) throw RuntimeFailure{"deletion queues left finalizers unrun"};
  return kExitOk;
}

struct BenchFlags {
  std::string scene;
  unsigned doublings = 5;
  unsigned frames = 5;
  unsigned warmup = 3;
  std::string out;
  int width = 256;
  int height = 256;
  int msaa = 4;
  unsigned workers = 0;
};

void print_row(const sr_bench_row* row, void* user) {
  auto* out = static_cast<std::ostream*>(user);
  char buf[512];
  sr_bench_csv_row(row, buf, sizeof buf);
  *out << buf << '\n';
  out->flush();
}

int cmd_bench(const BenchFlags& f) {
  SceneHandle scene(f.scene);
  sr_bench_options options;
  sr_bench_options_default(&options);
  options.doublings = f.doublings;
  options.frames = f.frames;
  options.warmup = f.warmup;
  options.config.width = f.width;
  options.config.height = f.height;
  options.config.msaa = f.msaa;
  options.config.workers = f.workers;
  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!f.out.empty()) {
    file.open(f.out);
    if (!file) throw RuntimeFailure{"cannot open '" + f.out + "'"};
    out = &file;
  }
  *out << sr_bench_csv_header() << '\n';
  check(sr_bench_run(scene.p, &options, print_row, out), "bench failed");
  return kExitOk;
}

std::vector<const char*> roster_of(const sr_scene* scene) {
  std::vector<const char*> names;
  for (size_t i = 0; i < sr_scene_mesh_node_count(scene); ++i) names.push_back(sr_scene_mesh_node_name(scene, i));
  return names;
}

void request_stub_stop(int) { sr_physics_stub_request_stop(); }

struct StubFlags {
  std::string scene;
  std::string shm;
  double tick_hz = 60.0;
  std::uint64_t max_ticks = 0;
  bool reclaim = false;
};

int cmd_physics_stub(const StubFlags& f) {
  SceneHandle scene(f.scene);
  struct sigaction sa {};
  sa.sa_handler = request_stub_stop;
  sigemptyset(&sa.sa_mask);
  sigaction(SIGTERM, &sa, nullptr);
  sigaction(SIGINT, &sa, nullptr);
  const auto names = roster_of(scene.p);
  sr_stub_options o{f.shm.c_str(), names.data(), names.size(), f.tick_hz, f.max_ticks, f.reclaim ? 1 : 0};
  check(sr_physics_stub_run(&o), "physics stub failed");
  return kExitOk;
}

struct DemoFlags {
  RenderFlags render;
  std::string shm = "simrender-demo";
  double tick_hz = 60.0;
  double fps = 30.0;
  std::uint64_t frames = 3;
  std::int64_t kill_stub_after = -1;
  double attach_timeout_s = 10.0;
};

struct StubProcess {
  pid_t pid = -1;
  bool exited = false;
  int status = 0;

  bool alive() {
    if (exited) return false;
    if (waitpid(pid, &status, WNOHANG) == pid) exited = true;
    return !exited;
  }
  void stop(int sig) {
    if (exited || pid <= 0) return;
    kill(pid, sig);
    waitpid(pid, &status, 0);
    exited = true;
  }
};

int stub_alive(void* user) { return static_cast<StubProcess*>(user)->alive() ? 1 : 0; }

int cmd_interchange_demo(const DemoFlags& f) {
  SceneHandle scene(f.render.scene);
  if (sr_scene_mesh_node_count(scene.p) == 0) throw RuntimeFailure{"scene has no mesh nodes to animate"};

  const std::string self = std::filesystem::read_symlink("/proc/self/exe").string();
  const std::string hz = std::to_string(f.tick_hz);
  std::vector<std::string> args = {self, "physics-stub", "--scene", f.render.scene, "--shm", f.shm,
                                   "--tick-hz", hz, "--reclaim"};
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);

  StubProcess stub;
  if (posix_spawn(&stub.pid, self.c_str(), nullptr, nullptr, argv.data(), environ) != 0)
    throw RuntimeFailure{"cannot spawn physics stub"};

  auto cleanup = [&] {
    stub.stop(SIGTERM);
    sr_table_unlink(f.shm.c_str());
  };

  // Attach once the writer has published its first tick.
  sr_table_reader* reader = nullptr;
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(f.attach_timeout_s);
  while (true) {
    if (!stub.alive()) {
      sr_table_detach(reader);
      cleanup();
      throw RuntimeFailure{"physics stub exited before publishing a frame"};
    }
    if (!reader && sr_table_attach(f.shm.c_str(), &reader) != SR_OK) reader = nullptr;
    std::uint64_t generation = 0;
    if (reader && sr_table_read(reader, &generation, nullptr, 0, nullptr) == SR_OK && generation >= 2) break;
    if (std::chrono::steady_clock::now() > deadline) {
      sr_table_detach(reader);
      cleanup();
      throw RuntimeFailure{"timed out attaching to region '" + f.shm + "'"};
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }

  sr_pose_source* poses = nullptr;
  check(sr_pose_source_create(reader, stub_alive, &stub, &poses), "cannot create pose source");

  sr_render_config config = make_config(f.render);
  config.target_hz = f.fps;
  int exit_code = kExitOk;
  sr_frame_info info{};
  try {
    RendererHandle renderer(scene.p, config);
    for (std::uint64_t i = 0; i < f.frames; ++i) {
      check(sr_renderer_render_frame(renderer.p, poses, &info), "render failed");
      const std::string path = output_path(f.render.out, i, f.frames);
      check(sr_renderer_write_image(renderer.p, path.c_str()), "cannot write image");
      const long long tick = info.pose_generation >= 2 ? static_cast<long long>(info.pose_generation / 2 - 1) : -1;
      std::printf("frame %llu generation %llu tick %lld warnings %zu unmatched %zu\n",
                  static_cast<unsigned long long>(i), static_cast<unsigned long long>(info.pose_generation), tick,
                  info.pose_warnings, info.unmatched_names);
      std::fflush(stdout);
      if (f.kill_stub_after >= 0 && static_cast<std::int64_t>(i) == f.kill_stub_after) stub.stop(SIGKILL);
    }
  } catch (...) {
    sr_pose_source_free(poses);
    cleanup();
    throw;
  }
  sr_pose_source_free(poses);

  const bool crashed = stub.exited;
  const int status = stub.status;
  cleanup();
  if (crashed || info.pose_warnings > 0) {
    std::fprintf(stderr, "warning: physics stub detached (%zu warning%s)", info.pose_warnings,
                 info.pose_warnings == 1 ? "" : "s");
    if (crashed && WIFSIGNALED(status)) std::fprintf(stderr, ", killed by signal %d", WTERMSIG(status));
    std::fprintf(stderr, "\n");
    exit_code = kExitRuntime;
  }
  return exit_code;
}

int cmd_dump_scene(const std::string& path) {
  SceneHandle scene(path);
  char* text = nullptr;
  check(sr_scene_dump(scene.p, &text), "dump failed");
  std::cout << text << '\n';
  sr_string_free(text);
  return kExitOk;
}

int cmd_dump_bvh(const std::string& path, std::uint32_t geometry, bool compacted) {
  SceneHandle scene(path);
  char* text = nullptr;
  check(sr_scene_bvh_dump(scene.p, geometry, compacted ? 1 : 0, &text), "dump failed");
  std::cout << text;
  sr_string_free(text);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"simrender: deterministic software renderer"};
  app.require_subcommand(1);

  RenderFlags render;
  auto* render_cmd = app.add_subcommand("render", "Render a scene to image files");
  add_render_flags(render_cmd, render, true);
  render_cmd->add_option("--out", render.out, "Output path or prefix");
  render_cmd->add_option("--target-hz", render.target_hz, "Frame pacing rate (0 = unpaced)")->check(CLI::NonNegativeNumber);
  render_cmd->add_option("--timing", render.timing, "Write per-frame stage timings as CSV");

  BenchFlags bench;
  auto* bench_cmd = app.add_subcommand("bench", "Scaling benchmark, CSV output");
  bench_cmd->add_option("--scene", bench.scene, "glTF scene file")->required();
  bench_cmd->add_option("--doublings", bench.doublings, "Largest doubling count K")->check(CLI::Range(1u, 24u));
  bench_cmd->add_option("--frames", bench.frames, "Measured frames per row")->check(CLI::Range(5u, 100000u));
  bench_cmd->add_option("--warmup", bench.warmup, "Warmup frames per row");
  bench_cmd->add_option("--out", bench.out, "CSV path (default stdout)");
  bench_cmd->add_option("--width", bench.width, "Image width")->check(CLI::Range(1, 16384));
  bench_cmd->add_option("--height", bench.height, "Image height")->check(CLI::Range(1, 16384));
  bench_cmd->add_option("--msaa", bench.msaa, "Samples per pixel")->check(CLI::IsMember({1, 2, 4, 8}));
  bench_cmd->add_option("--workers", bench.workers, "Raster worker threads (0 = all cores)");

  DemoFlags demo;
  auto* demo_cmd = app.add_subcommand("interchange-demo", "Render poses streamed from a physics stub process");
  add_render_flags(demo_cmd, demo.render, false);
  demo_cmd->add_option("--shm", demo.shm, "Shared-memory region name");
  demo_cmd->add_option("--frames", demo.frames, "Frames to render")->check(CLI::PositiveNumber);
  demo_cmd->add_option("--tick-hz", demo.tick_hz, "Physics tick rate")->check(CLI::PositiveNumber);
  demo_cmd->add_option("--fps", demo.fps, "Render pacing rate")->check(CLI::PositiveNumber);
  demo_cmd->add_option("--out", demo.render.out, "Output prefix");
  demo_cmd->add_option("--kill-stub-after", demo.kill_stub_after, "Kill the stub after this frame")
      ->group("");

  StubFlags stub;
  auto* stub_cmd = app.add_subcommand("physics-stub", "Shared-memory writer process")->group("");
  stub_cmd->add_option("--scene", stub.scene)->required();
  stub_cmd->add_option("--shm", stub.shm)->required();
  stub_cmd->add_option("--tick-hz", stub.tick_hz)->check(CLI::PositiveNumber);
  stub_cmd->add_option("--max-ticks", stub.max_ticks);
  stub_cmd->add_flag("--reclaim", stub.reclaim);

  std::string dump_path;
  auto* dump_cmd = app.add_subcommand("dump-scene", "Print the parsed scene as JSON");
  dump_cmd->add_option("--scene", dump_path)->required();

  std::uint32_t bvh_geometry = 0;
  bool bvh_compacted = false;
  auto* bvh_cmd = app.add_subcommand("dump-bvh", "Print the BVH of one geometry");
  bvh_cmd->add_option("--scene", dump_path)->required();
  bvh_cmd->add_option("--geometry", bvh_geometry, "Geometry id");
  bvh_cmd->add_flag("--compacted", bvh_compacted, "Dump after compaction");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*render_cmd) return cmd_render(render);
    if (*bench_cmd) return cmd_bench(bench);
    if (*demo_cmd) {
      demo.render.frames = demo.frames;
      return cmd_interchange_demo(demo);
    }
    if (*stub_cmd) return cmd_physics_stub(stub);
    if (*dump_cmd) return cmd_dump_scene(dump_path);
    if (*bvh_cmd) return cmd_dump_bvh(dump_path, bvh_geometry, bvh_compacted);
  } catch (const RuntimeFailure& e) {
    std::fprintf(stderr, "error: %s\n", e.message.c_str());
    return kExitRuntime;
  }
  return kExitUsage;
}
