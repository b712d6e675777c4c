// Copyright (c) 2026 The cosg Authors
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

#include "cosg/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "cosg/errors.hpp"

namespace cosg {
namespace {

constexpr char kMagic[4] = {'R', 'G', 'T', '1'};

template <typename U>
void put_le(std::ostream& out, U value) {
  char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xff);
  out.write(bytes, sizeof(U));
}

template <typename U>
bool get_le(std::istream& in, U& value) {
  unsigned char bytes[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(U))) return false;
  value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(bytes[i]) << (8 * i);
  return true;
}

template <typename U>
U require_le(std::istream& in, const char* what) {
  U v{};
  if (!get_le(in, v)) throw DataError(std::string("checkpoint truncated while reading ") + what);
  return v;
}

}  // namespace

void Checkpoint::put(std::string name, Tensor tensor) {
  for (auto& e : entries_) {
    if (e.name == name) {
      e.tensor = std::move(tensor);
      return;
    }
  }
  entries_.push_back({std::move(name), std::move(tensor)});
}

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return &e.tensor;
  return nullptr;
}

const Tensor& Checkpoint::at(const std::string& name) const {
  if (const Tensor* t = find(name)) return *t;
  throw DataError("checkpoint has no entry '" + name + "'");
}

std::vector<std::string> Checkpoint::names(const std::string& prefix) const {
  std::vector<std::string> out;
  for (const auto& e : entries_)
    if (e.name.compare(0, prefix.size(), prefix) == 0) out.push_back(e.name);
  return out;
}

void Checkpoint::write(std::ostream& out) const {
  out.write(kMagic, 4);
  put_le<std::uint32_t>(out, kVersion);
  for (const auto& e : entries_) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(e.tensor.rank()));
    for (std::size_t d : e.tensor.shape()) put_le<std::uint64_t>(out, d);
    for (double v : e.tensor.values()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
  if (!out) throw DataError("failed writing checkpoint");
}

Checkpoint Checkpoint::read(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw DataError("not an RGT1 checkpoint (bad magic)");
  }
  const auto version = require_le<std::uint32_t>(in, "version");
  if (version != kVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ck;
  std::uint32_t name_len = 0;
  while (get_le(in, name_len)) {
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) throw DataError("checkpoint truncated in entry name");
    const auto rank = require_le<std::uint32_t>(in, "rank");
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(require_le<std::uint64_t>(in, "dims"));
    std::vector<double> values(shape_size(shape));
    for (auto& v : values) v = std::bit_cast<double>(require_le<std::uint64_t>(in, "payload"));
    ck.entries_.push_back({std::move(name), Tensor(std::move(shape), std::move(values))});
  }
  return ck;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  write(out);
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  return read(in);
}

}  // namespace cosg
