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

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "cosg/tensor.hpp"

namespace cosg {

/// Ordered collection of named tensors stored in the "RGT1" binary container:
///
///   magic "RGT1" | u32 version
///   repeated until EOF:
///     u32 name length | name bytes | u32 rank | u64 dims[rank] | f64 payload
///
/// All integers and floats are little-endian. Round-trips are bit-exact.
class Checkpoint {
 public:
  static constexpr std::uint32_t kVersion = 1;

  struct Entry {
    std::string name;
    Tensor tensor;
  };

  void put(std::string name, Tensor tensor);
  bool contains(const std::string& name) const { return find(name) != nullptr; }
  const Tensor* find(const std::string& name) const;
  /// Throws DataError when absent.
  const Tensor& at(const std::string& name) const;
  /// Names starting with `prefix`, in insertion order.
  std::vector<std::string> names(const std::string& prefix = "") const;
  const std::vector<Entry>& entries() const { return entries_; }

  void write(std::ostream& out) const;
  static Checkpoint read(std::istream& in);
  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

 private:
  std::vector<Entry> entries_;
};

}  // namespace cosg
