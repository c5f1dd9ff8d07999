// Copyright 2026 The GeoShare Authors
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

#include "geoshare/tiles/codec.h"

#include <bit>
#include <string>

namespace geoshare::tiles {
namespace {

constexpr std::uint8_t kMagic[4] = {0x47, 0x54, 0x42, 0x31};

class Writer {
 public:
  explicit Writer(std::size_t size) { out_.reserve(size); }

  void U32(std::uint32_t x) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(x >> (8 * i)));
  }
  void F32(float x) { U32(std::bit_cast<std::uint32_t>(x)); }
  void U8(std::uint8_t x) { out_.push_back(x); }

  std::vector<std::uint8_t> Take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint32_t U32() {
    std::uint32_t x = 0;
    for (int i = 0; i < 4; ++i) x |= std::uint32_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += 4;
    return x;
  }
  float F32() { return std::bit_cast<float>(U32()); }
  std::uint8_t U8() { return bytes_[pos_++]; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> EncodeTile(const mesh::TriangleMesh& mesh) {
  mesh.Validate();
  const std::size_t v = mesh.positions.size();
  const std::size_t t = mesh.triangles.size();
  std::uint32_t flags = 0;
  if (mesh.HasNormals()) flags |= kGtbNormals;
  if (mesh.HasColors()) flags |= kGtbColors;
  Writer w(kGtbHeaderSize + v * (12 + (mesh.HasNormals() ? 12 : 0) +
                                 (mesh.HasColors() ? 4 : 0)) +
           t * 12);
  for (const auto b : kMagic) w.U8(b);
  w.U32(kGtbVersion);
  w.U32(static_cast<std::uint32_t>(v));
  w.U32(static_cast<std::uint32_t>(t));
  w.U32(flags);
  for (const auto& p : mesh.positions) {
    for (int i = 0; i < 3; ++i) w.F32(p[i]);
  }
  for (const auto& n : mesh.normals) {
    for (int i = 0; i < 3; ++i) w.F32(n[i]);
  }
  for (const auto& c : mesh.colors) {
    for (const auto b : c) w.U8(b);
  }
  for (const auto& tri : mesh.triangles) {
    for (const auto i : tri) w.U32(i);
  }
  return w.Take();
}

mesh::TriangleMesh DecodeTile(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) Fail(TilesErrc::kTruncatedBuffer, "buffer shorter than the magic");
  for (int i = 0; i < 4; ++i) {
    if (bytes[i] != kMagic[i]) Fail(TilesErrc::kBadMagic, "not a GTB1 payload");
  }
  if (bytes.size() < kGtbHeaderSize) {
    Fail(TilesErrc::kTruncatedBuffer, "buffer shorter than the header");
  }
  Reader r(bytes.subspan(4));
  const std::uint32_t version = r.U32();
  if (version != kGtbVersion) {
    Fail(TilesErrc::kUnsupportedVersion, "version " + std::to_string(version));
  }
  const std::uint64_t v = r.U32();
  const std::uint64_t t = r.U32();
  const std::uint32_t flags = r.U32();
  if ((flags & ~(kGtbNormals | kGtbColors)) != 0) {
    Fail(TilesErrc::kUnsupportedVersion, "unknown flag bits " + std::to_string(flags));
  }
  const bool normals = (flags & kGtbNormals) != 0;
  const bool colors = (flags & kGtbColors) != 0;
  const std::uint64_t expected =
      kGtbHeaderSize + v * (12 + (normals ? 12 : 0) + (colors ? 4 : 0)) + t * 12;
  if (bytes.size() < expected) {
    Fail(TilesErrc::kTruncatedBuffer, "expected " + std::to_string(expected) +
                                          " bytes, got " + std::to_string(bytes.size()));
  }
  if (bytes.size() > expected) {
    Fail(TilesErrc::kTruncatedBuffer, std::to_string(bytes.size() - expected) +
                                          " trailing bytes after the payload");
  }

  mesh::TriangleMesh m;
  m.positions.resize(v);
  for (auto& p : m.positions) {
    for (int i = 0; i < 3; ++i) p[i] = r.F32();
  }
  if (normals) {
    m.normals.resize(v);
    for (auto& n : m.normals) {
      for (int i = 0; i < 3; ++i) n[i] = r.F32();
    }
  }
  if (colors) {
    m.colors.resize(v);
    for (auto& c : m.colors) {
      for (auto& b : c) b = r.U8();
    }
  }
  m.triangles.resize(t);
  for (std::size_t f = 0; f < t; ++f) {
    for (auto& i : m.triangles[f]) {
      i = r.U32();
      if (i >= v) {
        Fail(TilesErrc::kIndexOutOfRange, "triangle " + std::to_string(f) +
                                              " references vertex " + std::to_string(i));
      }
    }
  }
  return m;
}

}  // namespace geoshare::tiles
