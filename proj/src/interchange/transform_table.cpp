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

#include <fcntl.h>
#include <sched.h>
#include <signal.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <bit>
#include <cerrno>
#include <cstring>
#include <set>

#include "simrender/error.hpp"
#include "simrender/interchange.hpp"

namespace simrender {

static_assert(std::endian::native == std::endian::little, "table layout assumes a little-endian host");

namespace {

template <typename T>
std::atomic_ref<T> field(std::uint8_t* region, std::size_t offset) {
  return std::atomic_ref<T>(*reinterpret_cast<T*>(region + offset));
}

template <typename T>
T load_plain(const std::uint8_t* p) {
  T v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

template <typename T>
void store_plain(std::uint8_t* p, T v) {
  std::memcpy(p, &v, sizeof v);
}

std::string errno_text() { return std::strerror(errno); }

void encode_record(std::uint8_t* rec, const std::string& name, const Mat4& m) {
  std::memset(rec, 0, kTableNameSize);
  std::memcpy(rec, name.data(), name.size());
  for (int i = 0; i < 16; ++i) store_plain<float>(rec + kTableNameSize + 4 * i, static_cast<float>(m.m[i]));
}

}  // namespace

SharedRegion::SharedRegion(std::string name, std::uint8_t* data, std::size_t size, bool owner)
    : name_(std::move(name)), data_(data), size_(size), owner_(owner) {}

SharedRegion::SharedRegion(SharedRegion&& other) noexcept
    : name_(std::move(other.name_)), data_(other.data_), size_(other.size_), owner_(other.owner_) {
  other.data_ = nullptr;
  other.owner_ = false;
}

SharedRegion& SharedRegion::operator=(SharedRegion&& other) noexcept {
  if (this != &other) {
    release();
    name_ = std::move(other.name_);
    data_ = other.data_;
    size_ = other.size_;
    owner_ = other.owner_;
    other.data_ = nullptr;
    other.owner_ = false;
  }
  return *this;
}

SharedRegion::~SharedRegion() { release(); }

void SharedRegion::release() {
  if (data_) munmap(data_, size_);
  if (owner_) shm_unlink(name_.c_str());
  data_ = nullptr;
  owner_ = false;
}

std::string normalize_region_name(const std::string& name) {
  if (name.empty() || name == "/") throw Error(ErrorCode::kValidation, "region name is empty");
  std::string n = name.front() == '/' ? name : "/" + name;
  if (n.find('/', 1) != std::string::npos) throw Error(ErrorCode::kValidation, "region name may not contain '/'");
  return n;
}

bool unlink_region(const std::string& name) { return shm_unlink(normalize_region_name(name).c_str()) == 0; }

void lock_table(std::uint8_t* region) {
  auto owner = field<std::uint32_t>(region, kLockSlotOffset);
  const auto self = static_cast<std::uint32_t>(getpid());
  for (unsigned spin = 0;; ++spin) {
    std::uint32_t expected = 0;
    if (owner.compare_exchange_weak(expected, self, std::memory_order_acquire)) return;
    // Steal the slot from a process that died while holding it.
    if (expected != 0 && expected != self && kill(static_cast<pid_t>(expected), 0) == -1 && errno == ESRCH) {
      if (owner.compare_exchange_strong(expected, self, std::memory_order_acquire)) return;
    }
    if (spin % 16 == 15) sched_yield();
  }
}

void unlock_table(std::uint8_t* region) {
  field<std::uint32_t>(region, kLockSlotOffset).store(0, std::memory_order_release);
}

TableWriter TableWriter::create(const std::string& region, const std::vector<std::string>& names, bool reclaim) {
  std::set<std::string> seen;
  for (const auto& n : names) {
    if (n.empty() || n.size() >= kTableNameSize)
      throw Error(ErrorCode::kValidation, "node name '" + n + "' must be 1.." + std::to_string(kTableNameSize - 1) + " bytes");
    if (!seen.insert(n).second) throw Error(ErrorCode::kValidation, "duplicate node name '" + n + "'");
  }
  const std::string shm_name = normalize_region_name(region);
  if (reclaim) shm_unlink(shm_name.c_str());
  const int fd = shm_open(shm_name.c_str(), O_CREAT | O_EXCL | O_RDWR, 0600);
  if (fd < 0) throw Error(ErrorCode::kIo, "cannot create region '" + shm_name + "': " + errno_text());
  const std::size_t size = table_region_size(names.size());
  if (ftruncate(fd, static_cast<off_t>(size)) != 0) {
    const std::string msg = errno_text();
    close(fd);
    shm_unlink(shm_name.c_str());
    throw Error(ErrorCode::kIo, "cannot size region '" + shm_name + "': " + msg);
  }
  void* p = mmap(nullptr, size, PROT_READ | PROT_WRITE, MAP_SHARED, fd, 0);
  close(fd);
  if (p == MAP_FAILED) {
    const std::string msg = errno_text();
    shm_unlink(shm_name.c_str());
    throw Error(ErrorCode::kIo, "cannot map region '" + shm_name + "': " + msg);
  }
  TableWriter w;
  w.region_ = SharedRegion(shm_name, static_cast<std::uint8_t*>(p), size, true);
  w.roster_ = names;
  w.current_.assign(names.size(), Mat4::identity());

  std::uint8_t* base = w.region_.data();
  std::memset(base, 0, size);
  store_plain<std::uint32_t>(base + 0, kTableMagic);
  store_plain<std::uint32_t>(base + 4, kTableVersion);
  store_plain<std::uint32_t>(base + 8, static_cast<std::uint32_t>(names.size()));
  for (std::size_t i = 0; i < names.size(); ++i)
    encode_record(base + kTableHeaderSize + i * kTableRecordSize, names[i], w.current_[i]);
  std::atomic_thread_fence(std::memory_order_release);
  return w;
}

void TableWriter::write_frame(std::span<const NamedTransform> transforms) {
  std::vector<Mat4> next = current_;
  for (const auto& t : transforms) {
    const auto it = std::find(roster_.begin(), roster_.end(), t.name);
    if (it == roster_.end()) throw Error(ErrorCode::kValidation, "node '" + t.name + "' is not in the table roster");
    next[static_cast<std::size_t>(it - roster_.begin())] = t.world;
  }
  std::uint8_t* base = region_.data();
  auto gen = field<std::uint64_t>(base, 16);
  lock_table(base);
  const std::uint64_t g = gen.load(std::memory_order_relaxed);
  gen.store(g + 1, std::memory_order_relaxed);
  std::atomic_thread_fence(std::memory_order_release);
  for (std::size_t i = 0; i < roster_.size(); ++i)
    encode_record(base + kTableHeaderSize + i * kTableRecordSize, roster_[i], next[i]);
  gen.store(g + 2, std::memory_order_release);
  unlock_table(base);
  current_ = std::move(next);
}

std::uint64_t TableWriter::generation() const {
  return field<std::uint64_t>(region_.data(), 16).load(std::memory_order_acquire);
}

TableReader TableReader::attach(const std::string& region) {
  const std::string shm_name = normalize_region_name(region);
  const int fd = shm_open(shm_name.c_str(), O_RDWR, 0);
  if (fd < 0) throw Error(ErrorCode::kIo, "cannot open region '" + shm_name + "': " + errno_text());
  struct stat st {};
  if (fstat(fd, &st) != 0) {
    close(fd);
    throw Error(ErrorCode::kIo, "cannot stat region '" + shm_name + "'");
  }
  const auto size = static_cast<std::size_t>(st.st_size);
  if (size < kTableHeaderSize) {
    close(fd);
    throw Error(ErrorCode::kIncompatibleRegion, "region '" + shm_name + "' is smaller than the table header");
  }
  // Read-write because the lock slot lives in the header.
  void* p = mmap(nullptr, size, PROT_READ | PROT_WRITE, MAP_SHARED, fd, 0);
  close(fd);
  if (p == MAP_FAILED) throw Error(ErrorCode::kIo, "cannot map region '" + shm_name + "': " + errno_text());
  TableReader r;
  r.region_ = SharedRegion(shm_name, static_cast<std::uint8_t*>(p), size, false);
  const std::uint8_t* base = r.region_.data();
  const auto magic = load_plain<std::uint32_t>(base);
  const auto version = load_plain<std::uint32_t>(base + 4);
  if (magic != kTableMagic) throw Error(ErrorCode::kIncompatibleRegion, "region '" + shm_name + "' has a bad magic number");
  if (version != kTableVersion)
    throw Error(ErrorCode::kIncompatibleRegion, "region '" + shm_name + "' has version " + std::to_string(version));
  r.node_count_ = load_plain<std::uint32_t>(base + 8);
  if (table_region_size(r.node_count_) > size)
    throw Error(ErrorCode::kIncompatibleRegion, "region '" + shm_name + "' is too small for its node count");
  return r;
}

std::uint64_t TableReader::peek_generation() const {
  return field<std::uint64_t>(region_.data(), 16).load(std::memory_order_acquire);
}

TransformSnapshot TableReader::read_frame() {
  std::uint8_t* base = region_.data();
  auto gen = field<std::uint64_t>(base, 16);
  TransformSnapshot snap;
  snap.transforms.resize(node_count_);
  for (int attempt = 0; attempt < kReadAttempts; ++attempt) {
    lock_table(base);
    const std::uint64_t before = gen.load(std::memory_order_acquire);
    if (before % 2 == 0) {
      for (std::uint32_t i = 0; i < node_count_; ++i) {
        const std::uint8_t* rec = base + kTableHeaderSize + i * kTableRecordSize;
        auto& t = snap.transforms[i];
        t.name.assign(reinterpret_cast<const char*>(rec), strnlen(reinterpret_cast<const char*>(rec), kTableNameSize));
        for (int k = 0; k < 16; ++k) t.world.m[k] = load_plain<float>(rec + kTableNameSize + 4 * k);
      }
      std::atomic_thread_fence(std::memory_order_acquire);
      const std::uint64_t after = gen.load(std::memory_order_relaxed);
      unlock_table(base);
      if (after == before) {
        snap.generation = before;
        return snap;
      }
    } else {
      unlock_table(base);
    }
    sched_yield();
  }
  throw Error(ErrorCode::kContention, "no stable snapshot after " + std::to_string(kReadAttempts) + " attempts");
}

TablePoseSource::TablePoseSource(TableReader reader, std::function<bool()> writer_alive)
    : reader_(std::move(reader)), writer_alive_(std::move(writer_alive)) {}

PoseStatus TablePoseSource::poll(TransformSnapshot& out) {
  if (detached_) return PoseStatus::kDetached;
  if (writer_alive_ && !writer_alive_()) {
    detached_ = true;
    return PoseStatus::kDetached;
  }
  try {
    out = reader_.read_frame();
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kContention) throw;
    ++contention_errors_;
    return PoseStatus::kNoData;
  }
  return out.generation == 0 ? PoseStatus::kNoData : PoseStatus::kOk;
}

}  // namespace simrender
