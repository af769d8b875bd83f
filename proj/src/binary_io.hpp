// Copyright 2026 The bctlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Little-endian binary readers/writers shared by the dataset, model and
// feature-cache file formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bctlab/error.hpp"

namespace bctlab::io {

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

class Writer {
 public:
  void magic(std::string_view m) { buf_.insert(buf_.end(), m.begin(), m.end()); }

  template <typename T>
  void put(T v) {
    v = to_little(v);
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }

  void put_f64s(std::span<const double> values) {
    for (double v : values) put(v);
  }

  const std::vector<char>& bytes() const { return buf_; }

  void write_to(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kIo, "cannot open for writing: " + path.string());
    out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    if (!out) fail(ErrorCode::kIo, "write failed: " + path.string());
  }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  Reader(std::vector<char> bytes, std::string what)
      : buf_(std::move(bytes)), what_(std::move(what)) {}

  static Reader from_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::kIo, "cannot open for reading: " + path.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return Reader(std::move(bytes), path.string());
  }

  void expect_magic(std::string_view m) {
    need(m.size());
    if (std::memcmp(buf_.data() + pos_, m.data(), m.size()) != 0) {
      fail(ErrorCode::kCorruptFile, what_ + ": bad magic, expected " + std::string(m));
    }
    pos_ += m.size();
  }

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return to_little(v);
  }

  void get_f64s(std::span<double> out) {
    need(out.size() * sizeof(double));
    for (double& v : out) v = get<double>();
  }

  std::size_t remaining() const { return buf_.size() - pos_; }

  void expect_end() const {
    if (pos_ != buf_.size()) fail(ErrorCode::kCorruptFile, what_ + ": trailing bytes");
  }

  [[noreturn]] void corrupt(const std::string& why) const {
    fail(ErrorCode::kCorruptFile, what_ + ": " + why);
  }

 private:
  void need(std::size_t n) const {
    if (buf_.size() - pos_ < n) fail(ErrorCode::kCorruptFile, what_ + ": truncated payload");
  }

  std::vector<char> buf_;
  std::string what_;
  std::size_t pos_ = 0;
};

inline std::uint64_t fnv1a(std::span<const char> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace bctlab::io
