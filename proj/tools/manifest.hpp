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
#include <string>
#include <vector>

namespace cosg::cli {

enum class Split { kTrain, kVal, kTest };

std::string split_name(Split s);

struct ManifestEntry {
  std::string id;
  std::string speaker;
  Split split = Split::kTrain;
  std::filesystem::path bvh;
  std::filesystem::path wav;
  std::filesystem::path tsv;
};

/// CSV with a header naming the columns id, speaker, split, bvh, wav and tsv
/// (any order; extra columns are ignored). Relative paths resolve against
/// the manifest's directory. Ids must be unique and every file must exist.
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);

/// Entries whose speaker equals `speaker`; all entries when it is empty.
std::vector<ManifestEntry> filter_speaker(const std::vector<ManifestEntry>& entries, const std::string& speaker);

/// Hex SHA-1 of "blob <size>\0<content>", the object id git assigns a file.
std::string git_blob_sha1(const std::filesystem::path& path);

}  // namespace cosg::cli
