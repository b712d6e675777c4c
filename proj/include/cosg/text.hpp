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
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cosg/tensor.hpp"

namespace cosg {

inline constexpr std::size_t kWordDim = 300;

struct WordTiming {
  std::string word;
  double start = 0.0;  // seconds
  double end = 0.0;
};

/// Tab-separated "start<TAB>end<TAB>word" lines; blank lines and lines
/// starting with '#' are skipped.
std::vector<WordTiming> read_transcript(const std::filesystem::path& path);
void write_transcript(const std::filesystem::path& path, std::span<const WordTiming> words);

/// Word-vector table loaded from the plain-text format: one token followed by
/// `dim` numbers per line, with an optional "<count> <dim>" header line.
class WordVectors {
 public:
  explicit WordVectors(std::size_t dim = kWordDim) : dim_(dim) {}

  static WordVectors load(const std::filesystem::path& path, std::size_t dim = kWordDim);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return table_.size(); }
  bool contains(const std::string& word) const;
  void insert(const std::string& word, std::vector<double> vec);

  /// Table vector (exact match, then lower-cased), else the hash fallback.
  std::vector<double> lookup(const std::string& word) const;

  /// Deterministic out-of-vocabulary vector: FNV-1a of the token seeds a
  /// splitmix64 stream of values uniform in [-0.1, 0.1).
  std::vector<double> fallback(const std::string& word) const;

 private:
  std::size_t dim_;
  std::unordered_map<std::string, std::vector<double>> table_;
};

/// T x dim matrix: row t holds the vector of the word whose [start, end)
/// interval contains t / fps, or zeros (padding) when no word covers it.
Tensor align_text(std::span<const WordTiming> words, const WordVectors& vectors, std::size_t frames,
                  double fps = 30.0);

}  // namespace cosg
