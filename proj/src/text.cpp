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

#include "cosg/text.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cosg/errors.hpp"
#include "cosg/random.hpp"

namespace cosg {
namespace {

double parse_double(std::string_view s, const std::string& where, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ParseError(where + ": bad number '" + std::string(s) + "'", line);
  }
  return v;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

std::vector<WordTiming> read_transcript(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open transcript " + path.string());
  std::vector<WordTiming> words;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, '\t');) cells.push_back(cell);
    if (cells.size() != 3) {
      throw ParseError(path.string() + ": expected 3 tab-separated fields, found " + std::to_string(cells.size()),
                       line_no);
    }
    WordTiming w{cells[2], parse_double(cells[0], path.string(), line_no),
                 parse_double(cells[1], path.string(), line_no)};
    if (w.start < 0.0 || w.end <= w.start) {
      throw ParseError(path.string() + ": word '" + w.word + "' needs 0 <= start < end", line_no);
    }
    words.push_back(std::move(w));
  }
  return words;
}

void write_transcript(const std::filesystem::path& path, std::span<const WordTiming> words) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  for (const auto& w : words) out << fmt::format("{:.3f}\t{:.3f}\t{}\n", w.start, w.end, w.word);
}

WordVectors WordVectors::load(const std::filesystem::path& path, std::size_t dim) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open word vectors " + path.string());
  WordVectors wv(dim);
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ss(line);
    std::vector<std::string> tokens;
    for (std::string tok; ss >> tok;) tokens.push_back(tok);
    if (tokens.empty()) continue;
    if (line_no == 1 && tokens.size() == 2) {
      const bool numeric = std::all_of(tokens.begin(), tokens.end(), [](const std::string& t) {
        return !t.empty() && std::all_of(t.begin(), t.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
      });
      if (numeric) {
        if (std::stoul(tokens[1]) != dim) {
          throw ParseError(path.string() + ": header declares dimension " + tokens[1] + ", expected " +
                               std::to_string(dim),
                           line_no);
        }
        continue;
      }
    }
    if (tokens.size() != dim + 1) {
      throw ParseError(path.string() + ": expected a token and " + std::to_string(dim) + " values, found " +
                           std::to_string(tokens.size() - 1) + " values",
                       line_no);
    }
    std::vector<double> vec(dim);
    for (std::size_t i = 0; i < dim; ++i) vec[i] = parse_double(tokens[i + 1], path.string(), line_no);
    wv.table_[tokens[0]] = std::move(vec);
  }
  return wv;
}

bool WordVectors::contains(const std::string& word) const { return table_.count(word) > 0; }

void WordVectors::insert(const std::string& word, std::vector<double> vec) {
  if (vec.size() != dim_) {
    throw DimensionError("word vector for '" + word + "' has " + std::to_string(vec.size()) + " values, expected " +
                         std::to_string(dim_));
  }
  table_[word] = std::move(vec);
}

std::vector<double> WordVectors::lookup(const std::string& word) const {
  if (auto it = table_.find(word); it != table_.end()) return it->second;
  if (auto it = table_.find(lower(word)); it != table_.end()) return it->second;
  return fallback(word);
}

std::vector<double> WordVectors::fallback(const std::string& word) const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : word) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::vector<double> vec(dim_);
  for (double& v : vec) {
    const std::uint64_t bits = splitmix64(h);
    v = -0.1 + 0.2 * static_cast<double>(bits >> 11) * 0x1.0p-53;
  }
  return vec;
}

Tensor align_text(std::span<const WordTiming> words, const WordVectors& vectors, std::size_t frames, double fps) {
  if (frames < 1) throw DataError("align_text: need at least one frame");
  std::vector<WordTiming> sorted(words.begin(), words.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i].start < 0.0 || sorted[i].end <= sorted[i].start) {
      throw DataError("align_text: word '" + sorted[i].word + "' needs 0 <= start < end");
    }
    if (i > 0 && sorted[i].start < sorted[i - 1].end) {
      throw DataError("align_text: words '" + sorted[i - 1].word + "' and '" + sorted[i].word + "' overlap");
    }
  }
  Tensor out(frames, vectors.dim());
  std::size_t w = 0;
  for (std::size_t t = 0; t < frames; ++t) {
    const double time = static_cast<double>(t) / fps;
    while (w < sorted.size() && sorted[w].end <= time) ++w;
    if (w == sorted.size() || sorted[w].start > time) continue;
    const std::vector<double> vec = vectors.lookup(sorted[w].word);
    std::copy(vec.begin(), vec.end(), out.data() + t * vectors.dim());
  }
  return out;
}

}  // namespace cosg
