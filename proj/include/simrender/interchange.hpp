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

// Shared-memory transform table: one writer (the physics side), one reader
// (the renderer), full-table overwrite every tick.
//
// Layout (little endian):
//   0  u32 magic 0x41564931      4  u32 version (1)
//   8  u32 node_count           12  u32 reserved (0)
//  16  u64 generation (odd while a write is in progress)
//  24  40-byte lock slot (u32 owner pid, 0 = free; remaining bytes zero)
//  64  node_count records of 128 bytes: 64-byte zero-padded name,
//      16 float32 column-major world matrix

#include <atomic>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "simrender/frame_loop.hpp"
#include "simrender/math.hpp"
#include "simrender/scene.hpp"

namespace simrender {

inline constexpr std::uint32_t kTableMagic = 0x41564931;
inline constexpr std::uint32_t kTableVersion = 1;
inline constexpr std::size_t kTableHeaderSize = 64;
inline constexpr std::size_t kTableRecordSize = 128;
inline constexpr std::size_t kTableNameSize = 64;
inline constexpr std::size_t kLockSlotOffset = 24;
inline constexpr std::size_t kLockSlotSize = 40;
inline constexpr int kReadAttempts = 1000;

constexpr std::size_t table_region_size(std::size_t node_count) {
  return kTableHeaderSize + kTableRecordSize * node_count;
}

/// Maps a shared-memory region; unmaps on destruction.
class SharedRegion {
 public:
  SharedRegion() = default;
  SharedRegion(std::string name, std::uint8_t* data, std::size_t size, bool owner);
  SharedRegion(SharedRegion&& other) noexcept;
  SharedRegion& operator=(SharedRegion&& other) noexcept;
  ~SharedRegion();

  std::uint8_t* data() const { return data_; }
  std::size_t size() const { return size_; }
  const std::string& name() const { return name_; }
  /// Unlinks the name on destruction (writer side).
  bool owner() const { return owner_; }

 private:
  void release();
  std::string name_;
  std::uint8_t* data_ = nullptr;
  std::size_t size_ = 0;
  bool owner_ = false;
};

/// "/name" form used for shm_open.
std::string normalize_region_name(const std::string& name);
/// Removes a region by name; returns false when it did not exist.
bool unlink_region(const std::string& name);

class TableWriter {
 public:
  /// Creates the region exclusively. With `reclaim`, an existing region of
  /// the same name is unlinked first.
  static TableWriter create(const std::string& region, const std::vector<std::string>& names, bool reclaim = false);

  /// Rewrites every record under the lock. Roster names missing from
  /// `transforms` are rewritten with their previous matrix. Throws before
  /// touching the region if a name is not in the roster.
  void write_frame(std::span<const NamedTransform> transforms);

  std::uint64_t generation() const;
  const std::vector<std::string>& roster() const { return roster_; }
  std::span<const std::uint8_t> bytes() const { return {region_.data(), region_.size()}; }
  const std::string& region_name() const { return region_.name(); }

 private:
  SharedRegion region_;
  std::vector<std::string> roster_;
  std::vector<Mat4> current_;
};

class TableReader {
 public:
  static TableReader attach(const std::string& region);

  /// Consistent copy of the table; throws kContention after kReadAttempts.
  TransformSnapshot read_frame();
  /// Current generation without locking.
  std::uint64_t peek_generation() const;
  std::uint32_t node_count() const { return node_count_; }
  std::span<const std::uint8_t> bytes() const { return {region_.data(), region_.size()}; }

 private:
  SharedRegion region_;
  std::uint32_t node_count_ = 0;
};

/// Cross-process spinlock in the header lock slot.
void lock_table(std::uint8_t* region);
void unlock_table(std::uint8_t* region);

/// Node k of `roster` gets Translate(k, 0, 0) * RotateZ(0.1 t + k).
std::vector<NamedTransform> physics_stub_step(std::uint64_t t, const std::vector<std::string>& roster);

/// Mesh-bearing node names in node order.
std::vector<std::string> mesh_node_roster(const Scene& scene);

struct StubOptions {
  std::string region;
  std::vector<std::string> roster;
  double tick_hz = 60.0;
  std::uint64_t max_ticks = 0;  // 0 = until stopped
  bool reclaim = true;
};

/// Creates the table, publishes tick 0 at once, then one tick per period
/// until `stop` is set or `max_ticks` ticks were written.
void run_physics_stub(const StubOptions& options, const std::atomic<bool>& stop);

/// Pose source backed by a table reader. `writer_alive` is polled each frame;
/// once it reports false the source is detached for good.
class TablePoseSource : public PoseSource {
 public:
  TablePoseSource(TableReader reader, std::function<bool()> writer_alive = {});
  PoseStatus poll(TransformSnapshot& out) override;
  std::size_t contention_errors() const { return contention_errors_; }

 private:
  TableReader reader_;
  std::function<bool()> writer_alive_;
  bool detached_ = false;
  std::size_t contention_errors_ = 0;
};

}  // namespace simrender
