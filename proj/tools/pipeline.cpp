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

#include "pipeline.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <map>

#include "cosg/dataset.hpp"
#include "cosg/errors.hpp"
#include "manifest.hpp"

namespace cosg::cli {
namespace fs = std::filesystem;

namespace {

struct StoreClip {
  std::string id;
  std::string speaker;
  std::string split;
  std::size_t frames = 0;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  return std::string((std::istreambuf_iterator<char>(in)), {});
}

std::vector<StoreClip> read_store_index(const fs::path& store) {
  std::ifstream in(store / "clips.csv");
  if (!in) throw DataError("feature store " + store.string() + " has no clips.csv; run prepare first");
  std::vector<StoreClip> out;
  std::string line;
  std::getline(in, line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (std::size_t comma; (comma = line.find(',', start)) != std::string::npos; start = comma + 1)
      cells.push_back(line.substr(start, comma - start));
    cells.push_back(line.substr(start));
    if (cells.size() != 4) throw ParseError("clips.csv rows need 4 columns", line_no);
    out.push_back({cells[0], cells[1], cells[2], static_cast<std::size_t>(std::stoul(cells[3]))});
  }
  return out;
}

ExtractOptions extract_options(const RunConfig& c) {
  ExtractOptions o;
  o.fps = c.data.fps;
  o.max_length_mismatch = c.data.max_length_mismatch;
  o.facing = {c.data.left_shoulder, c.data.right_shoulder};
  o.features.root_relative = c.data.root_relative;
  return o;
}

}  // namespace

// ---------------------------------------------------------------------------

void run_prepare(const fs::path& manifest, const fs::path& out, RunConfig config) {
  config.validate();
  const auto entries = filter_speaker(load_manifest(manifest), config.data.speaker);
  const bool has_train =
      std::any_of(entries.begin(), entries.end(), [](const ManifestEntry& e) { return e.split == Split::kTrain; });
  if (!has_train) {
    throw DataError(config.data.speaker.empty()
                        ? "manifest has no training clips"
                        : fmt::format("no training clips for speaker '{}'", config.data.speaker));
  }
  fs::path vectors_path = config.data.vectors;
  if (vectors_path.is_relative()) vectors_path = manifest.parent_path() / vectors_path;
  config.data.vectors = fs::absolute(vectors_path).lexically_normal().string();
  const WordVectors vectors = WordVectors::load(config.data.vectors, config.data.word_dim);
  const ExtractOptions options = extract_options(config);

  fs::create_directories(out / "features");
  std::vector<ClipStreams> train;
  std::vector<StoreClip> index;
  std::optional<Skeleton> skeleton;
  for (const ManifestEntry& e : entries) {
    ClipStreams streams;
    MotionClip normalized;
    try {
      const MotionClip motion = load_bvh(e.bvh);
      const AudioBuffer audio = read_wav(e.wav);
      const auto words = read_transcript(e.tsv);
      streams = extract_streams(e.id, motion, audio, words, vectors, options, &normalized);
    } catch (const DataError& err) {
      spdlog::warn("skipping clip {}: {}", e.id, err.what());
      continue;
    }
    Checkpoint ck;
    save_streams(ck, std::span<const ClipStreams>(&streams, 1));
    ck.save(out / "features" / (e.id + ".rgt"));
    index.push_back({e.id, e.speaker, split_name(e.split), streams.frames()});
    spdlog::info("prepared {} ({} frames, {})", e.id, streams.frames(), split_name(e.split));
    if (e.split == Split::kTrain) {
      if (!skeleton) skeleton = normalized.skeleton;
      train.push_back(std::move(streams));
    }
  }
  if (train.empty()) throw DataError("every training clip was rejected during extraction");

  const StreamStats stats = fit_stream_stats(train);
  Checkpoint stats_ck;
  stats.save(stats_ck);
  stats_ck.save(out / "stats.rgt");
  stats.gesture.save_csv(out / "gesture_stats.csv");

  std::string csv = "id,speaker,split,frames\n";
  for (const StoreClip& c : index) csv += fmt::format("{},{},{},{}\n", c.id, c.speaker, c.split, c.frames);
  write_text(out / "clips.csv", csv);
  save_bvh(out / "skeleton.bvh", MotionClip(*skeleton, config.data.fps, 1));
  write_text(out / "manifest.sha1", git_blob_sha1(manifest) + "\n");
  config.save(out / "config.ini");
}

// ---------------------------------------------------------------------------

void run_train(const fs::path& store, const fs::path& out, const RunConfig& config) {
  config.validate();
  const StreamStats stats = StreamStats::load(Checkpoint::load(store / "stats.rgt"));
  std::vector<ClipStreams> clips;
  for (const StoreClip& c : read_store_index(store)) {
    if (c.split != "train") continue;
    auto loaded = load_streams(Checkpoint::load(store / "features" / (c.id + ".rgt")));
    for (auto& s : loaded) clips.push_back(normalize_streams(s, stats));
  }
  const WindowSpec spec{config.data.window, config.data.stride, config.train.seed_frames};
  const std::vector<Sample> samples = training_samples(clips, spec);
  if (samples.empty()) {
    throw DataError(fmt::format("no training clip reaches the {}-frame window", config.data.window));
  }

  fs::create_directories(out);
  config.save(out / "config.ini");
  write_text(out / "seed", fmt::format("{}\n", config.train.seed));
  write_text(out / "manifest.sha1", read_text(store / "manifest.sha1"));
  fs::copy_file(store / "skeleton.bvh", out / "skeleton.bvh", fs::copy_options::overwrite_existing);

  ReprGesture model(config.model, config.train.seed);
  Trainer trainer(model, config.train);
  spdlog::info("training on {} windows from {} clips; {} parameters", samples.size(), clips.size(),
               model.parameter_count());

  auto write_outputs = [&](const Checkpoint& params, const std::vector<LossBreakdown>& log) {
    Checkpoint ck = params;
    stats.save(ck);
    ck.save(out / "model.rgt");
    write_train_log(out / "train_log.csv", log);
  };
  Checkpoint last;
  model.save(last);
  std::vector<LossBreakdown> log;
  try {
    for (std::size_t e = 0; e < config.train.epochs; ++e) {
      if (config.train.max_steps > 0 && trainer.steps() >= config.train.max_steps) break;
      const LossBreakdown l = trainer.epoch(samples, e);
      log.push_back(l);
      last = Checkpoint();
      model.save(last);
      spdlog::info("epoch {:>4}  l_gesture {:.5f}  l_total {:.5f}  gamma {}", e, l.gesture, l.total, l.gamma);
    }
  } catch (const NumericError&) {
    write_outputs(last, log);
    throw;
  }
  write_outputs(last, log);
}

// ---------------------------------------------------------------------------

void run_generate(const fs::path& run, const fs::path& audio, const fs::path& transcript, const fs::path& out) {
  const RunConfig config = RunConfig::load(run / "config.ini");
  config.validate();
  const Checkpoint ck = Checkpoint::load(run / "model.rgt");
  if (!ck.contains("stats/gesture/mean")) {
    throw DataError("checkpoint " + (run / "model.rgt").string() + " has no normalisation statistics");
  }
  const StreamStats stats = StreamStats::load(ck);
  ReprGesture model(config.model, config.train.seed);
  model.load(ck);

  const WordVectors vectors = WordVectors::load(config.data.vectors, config.data.word_dim);
  const SpeechStreams speech = extract_speech(read_wav(audio), read_transcript(transcript), vectors, config.data.fps);
  const Tensor generated =
      synthesize_long(model, speech.text, normalize(speech.audio, stats.audio), normalize(speech.rhythm, stats.rhythm),
                      std::nullopt, config.data.window, config.train.seed_frames);
  const Skeleton skeleton = load_bvh(run / "skeleton.bvh").skeleton;
  const MotionClip clip = clip_from_features(denormalize(generated, stats.gesture), skeleton, config.data.fps);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save_bvh(out, clip);
  spdlog::info("wrote {} frames to {}", clip.frames, out.string());
}

// ---------------------------------------------------------------------------

namespace {

std::vector<fs::path> bvh_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError(dir.string() + " is not a directory");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".bvh") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  if (out.empty()) throw DataError("no .bvh files in " + dir.string());
  return out;
}

MotionSample truncated(const MotionSample& s, std::size_t frames) {
  return {s.id, s.positions.slice_rows(0, frames), s.features.slice_rows(0, frames)};
}

}  // namespace

std::vector<MetricsReport> run_evaluate(const std::vector<GeneratedSet>& generated, const fs::path& reference,
                                        const fs::path& out, const RunConfig& config,
                                        const std::optional<fs::path>& fgd_train) {
  config.validate();
  std::vector<MotionSample> ref;
  for (const fs::path& p : bvh_files(reference)) ref.push_back(motion_sample(p.stem().string(), load_bvh(p)));

  if (ref.empty()) throw DataError("no reference BVH files in " + reference.string());

  struct PairedSet {
    std::string name;
    std::vector<MotionSample> gen, ref;
  };
  std::vector<PairedSet> paired;
  for (const GeneratedSet& set : generated) {
    PairedSet ps{set.name, {}, {}};
    for (const MotionSample& r : ref) {
      const fs::path p = set.dir / (r.id + ".bvh");
      if (!fs::exists(p)) throw DataError(fmt::format("{}: no generated clip for reference {}", set.name, r.id));
      MotionSample g = motion_sample(r.id, load_bvh(p));
      const std::size_t tg = g.positions.rows(), tr = r.positions.rows();
      if (std::max(tg, tr) - std::min(tg, tr) > config.eval.length_tolerance) {
        throw DataError(fmt::format("{}: clip {} has {} frames but its reference has {}", set.name, r.id, tg, tr));
      }
      const std::size_t frames = std::min(tg, tr);
      ps.gen.push_back(truncated(g, frames));
      ps.ref.push_back(truncated(r, frames));
    }
    paired.push_back(std::move(ps));
  }

  std::unique_ptr<FgdFeatureModel> feature_model;
  {
    std::vector<Tensor> seqs;
    if (fgd_train) {
      for (const fs::path& p : bvh_files(*fgd_train)) seqs.push_back(motion_sample(p.stem().string(), load_bvh(p)).features);
    } else {
      for (const auto& s : ref) seqs.push_back(s.features);
    }
    try {
      if (seqs.empty()) throw DataError("no sequences to train on");
      auto m = std::make_unique<FgdFeatureModel>(seqs.front().cols(), config.eval.fgd);
      const auto history = m->fit(seqs);
      spdlog::info("feature-space FGD encoder: reconstruction MSE {:.4f} -> {:.4f}", history.front(), history.back());
      feature_model = std::move(m);
    } catch (const DataError& e) {
      spdlog::warn("feature-space FGD unavailable: {}", e.what());
    }
  }

  MetricsOptions options = config.eval.metrics;
  options.fps = config.data.fps;
  std::vector<MetricsReport> rows;
  rows.push_back(evaluate_motion("GT", ref, ref, options, feature_model.get()));
  for (const PairedSet& ps : paired) rows.push_back(evaluate_motion(ps.name, ps.gen, ps.ref, options, feature_model.get()));

  fs::create_directories(out);
  write_report_csv(out / "metrics.csv", rows);
  write_text(out / "metrics.txt", format_report_table(rows));
  write_report_svg(out / "metrics.svg", rows);
  return rows;
}

}  // namespace cosg::cli
