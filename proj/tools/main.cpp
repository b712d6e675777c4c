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

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "checks.hpp"
#include "config.hpp"
#include "cosg/errors.hpp"
#include "pipeline.hpp"

namespace fs = std::filesystem;
using namespace cosg;
using namespace cosg::cli;

namespace {

// NAME=DIR, or a bare DIR named after its last path component.
GeneratedSet parse_generated(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos) {
    const fs::path dir = fs::path(spec).lexically_normal();
    const std::string name = (dir.has_filename() ? dir : dir.parent_path()).filename().string();
    if (name.empty()) throw ConfigError("--generated: cannot derive a name from '" + spec + "'");
    return {name, dir};
  }
  if (eq == 0 || eq + 1 == spec.size()) throw ConfigError("--generated expects NAME=DIR or DIR, got '" + spec + "'");
  return {spec.substr(0, eq), spec.substr(eq + 1)};
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("cosg"));
  spdlog::set_pattern("[%H:%M:%S] [%^%l%$] %v");

  CLI::App app{"cosg: co-speech gesture synthesis with disentangled speech representations"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  fs::path manifest, out, config_path, store, run, audio, transcript, reference, fgd_train, work;
  std::string speaker;
  std::vector<std::string> generated;
  AblationFlags flags;
  bool full = false;
  std::vector<int> only;
  fs::path fixtures = fs::path(COSG_SOURCE_DIR) / "tests" / "fixtures" / "bvh";

  auto* prepare = app.add_subcommand("prepare", "Extract aligned feature streams for every clip in a manifest");
  prepare->add_option("--manifest", manifest, "CSV with id,speaker,split,bvh,wav,tsv")->required()->check(CLI::ExistingFile);
  prepare->add_option("--out", out, "Feature store directory")->required();
  prepare->add_option("--config", config_path, "INI overrides")->check(CLI::ExistingFile);
  prepare->add_option("--speaker", speaker, "Keep only this speaker");

  auto* train = app.add_subcommand("train", "Train a model on a prepared feature store");
  train->add_option("--store", store, "Feature store from 'prepare'")->required()->check(CLI::ExistingDirectory);
  train->add_option("--config", config_path, "INI overrides")->check(CLI::ExistingFile);
  train->add_option("--out", out, "Run directory")->required();
  train->add_flag("--no-gan", flags.no_gan, "Drop the adversarial gesture loss");
  train->add_flag("--no-recon", flags.no_recon, "Drop the reconstruction loss");
  train->add_flag("--no-domain", flags.no_domain, "Drop the domain adversary");
  train->add_flag("--no-repr", flags.no_repr, "Bypass the representation learning module");

  auto* generate = app.add_subcommand("generate", "Synthesize a gesture BVH for one utterance");
  generate->add_option("--run", run, "Run directory from 'train'")->required()->check(CLI::ExistingDirectory);
  generate->add_option("--audio", audio, "WAV file")->required()->check(CLI::ExistingFile);
  generate->add_option("--transcript", transcript, "Word timings (TSV)")->required()->check(CLI::ExistingFile);
  generate->add_option("--out", out, "Output BVH")->required();

  auto* evaluate = app.add_subcommand("evaluate", "Score generated BVH sets against a reference set");
  evaluate->add_option("--generated", generated, "NAME=DIR or DIR, repeatable")->required();
  evaluate->add_option("--reference", reference, "Directory of reference BVH")->required()->check(CLI::ExistingDirectory);
  evaluate->add_option("--out", out, "Report directory")->required();
  evaluate->add_option("--config", config_path, "INI overrides")->check(CLI::ExistingFile);
  evaluate->add_option("--fgd-train", fgd_train, "BVH directory for the FGD feature model")
      ->check(CLI::ExistingDirectory);

  auto* selftest = app.add_subcommand("selftest", "Run the acceptance checks");
  selftest->add_flag("--full", full, "Include the slow end-to-end and training checks");
  selftest->add_option("--only", only, "Criterion ids to run");
  selftest->add_option("--fixtures", fixtures, "BVH fixture root");
  selftest->add_option("--work", work, "Scratch directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  if (verbose) spdlog::set_level(spdlog::level::debug);

  try {
    if (*prepare) {
      RunConfig cfg;
      if (!config_path.empty()) cfg.merge_file(config_path);
      if (!speaker.empty()) cfg.data.speaker = speaker;
      run_prepare(manifest, out, cfg);
    } else if (*train) {
      RunConfig cfg;
      if (fs::exists(store / "config.ini")) cfg.merge_file(store / "config.ini");
      if (!config_path.empty()) cfg.merge_file(config_path);
      cfg.ablation.no_gan |= flags.no_gan;
      cfg.ablation.no_recon |= flags.no_recon;
      cfg.ablation.no_domain |= flags.no_domain;
      cfg.ablation.no_repr |= flags.no_repr;
      cfg.apply_ablations();
      run_train(store, out, cfg);
    } else if (*generate) {
      run_generate(run, audio, transcript, out);
    } else if (*evaluate) {
      RunConfig cfg;
      if (!config_path.empty()) cfg.merge_file(config_path);
      std::vector<GeneratedSet> sets;
      for (const auto& g : generated) sets.push_back(parse_generated(g));
      std::optional<fs::path> fgd;
      if (!fgd_train.empty()) fgd = fgd_train;
      run_evaluate(sets, reference, out, cfg, fgd);
      std::cout << std::ifstream(out / "metrics.txt").rdbuf();
    } else if (*selftest) {
      CheckOptions opts;
      opts.cli = fs::canonical("/proc/self/exe");
      opts.fixtures = fixtures;
      opts.work = work.empty() ? fs::temp_directory_path() / "cosg-selftest" : work;
      opts.only = only;
      if (opts.only.empty() && !full) opts.only = {1, 2, 3, 6, 7, 8, 9};
      bool ok = true;
      run_checks(opts, [&](const CheckResult& r) {
        std::cout << format_check(r) << std::endl;
        ok = ok && r.pass;
      });
      return ok ? 0 : 1;
    }
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
