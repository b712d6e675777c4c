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

#include "manifest.hpp"

#include <fmt/format.h>
#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "cosg/errors.hpp"

namespace cosg::cli {
namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

Split parse_split(const std::string& s, std::size_t line) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  throw ParseError("split '" + s + "' is not one of train, val, test", line);
}

}  // namespace

std::string split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  const std::filesystem::path base = path.parent_path();
  std::string line;
  std::size_t line_no = 0;
  std::map<std::string, std::size_t> column;
  static const std::array<const char*, 6> kRequired = {"id", "speaker", "split", "bvh", "wav", "tsv"};
  std::vector<ManifestEntry> out;
  std::set<std::string> ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (column.empty()) {
      for (std::size_t i = 0; i < cells.size(); ++i) column[cells[i]] = i;
      for (const char* name : kRequired) {
        if (!column.count(name)) throw ParseError(fmt::format("manifest header lacks column '{}'", name), line_no);
      }
      continue;
    }
    auto cell = [&](const char* name) -> const std::string& {
      const std::size_t i = column.at(name);
      if (i >= cells.size()) throw ParseError(fmt::format("row has no '{}' value", name), line_no);
      return cells[i];
    };
    ManifestEntry e;
    e.id = cell("id");
    if (e.id.empty()) throw ParseError("empty clip id", line_no);
    if (!ids.insert(e.id).second) throw ParseError("duplicate clip id '" + e.id + "'", line_no);
    e.speaker = cell("speaker");
    e.split = parse_split(cell("split"), line_no);
    const std::pair<const char*, std::filesystem::path*> files[] = {{"bvh", &e.bvh}, {"wav", &e.wav}, {"tsv", &e.tsv}};
    for (const auto& [name, target] : files) {
      std::filesystem::path p = cell(name);
      if (p.is_relative()) p = base / p;
      if (!std::filesystem::is_regular_file(p)) {
        throw ParseError(fmt::format("clip '{}': {} file {} does not exist", e.id, name, p.string()), line_no);
      }
      *target = p;
    }
    out.push_back(std::move(e));
  }
  if (column.empty()) throw DataError("manifest " + path.string() + " is empty");
  return out;
}

std::vector<ManifestEntry> filter_speaker(const std::vector<ManifestEntry>& entries, const std::string& speaker) {
  if (speaker.empty()) return entries;
  std::vector<ManifestEntry> out;
  std::copy_if(entries.begin(), entries.end(), std::back_inserter(out),
               [&](const ManifestEntry& e) { return e.speaker == speaker; });
  return out;
}

std::string git_blob_sha1(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  const std::string content((std::istreambuf_iterator<char>(in)), {});
  const std::string header = fmt::format("blob {}", content.size());

  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  const bool ok = ctx && EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, header.data(), header.size() + 1) == 1 &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest.data(), &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw Error("SHA-1 computation failed", 1);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

}  // namespace cosg::cli
