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

#include "config.hpp"

#include <fmt/format.h>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "cosg/errors.hpp"

namespace cosg::cli {
namespace {

namespace pt = boost::property_tree;

struct Key {
  const char* section;
  const char* name;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

[[noreturn]] void bad_value(const char* section, const char* name, const std::string& value, const char* type) {
  throw ConfigError(fmt::format("[{}] {} = '{}' is not a valid {}", section, name, value, type));
}

template <typename T>
T parse_number(const char* section, const char* name, const std::string& value, const char* type) {
  T out{};
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) bad_value(section, name, value, type);
  return out;
}

template <typename T>
Key size_key(const char* section, const char* name, T RunConfig::*group, std::size_t T::*field) {
  return {section, name, [=](const RunConfig& c) { return fmt::format("{}", c.*group.*field); },
          [=](RunConfig& c, const std::string& v) {
            c.*group.*field = parse_number<std::size_t>(section, name, v, "non-negative integer");
          }};
}

template <typename T>
Key u64_key(const char* section, const char* name, T RunConfig::*group, std::uint64_t T::*field) {
  return {section, name, [=](const RunConfig& c) { return fmt::format("{}", c.*group.*field); },
          [=](RunConfig& c, const std::string& v) {
            c.*group.*field = parse_number<std::uint64_t>(section, name, v, "non-negative integer");
          }};
}

template <typename T>
Key double_key(const char* section, const char* name, T RunConfig::*group, double T::*field) {
  return {section, name, [=](const RunConfig& c) { return fmt::format("{}", c.*group.*field); },
          [=](RunConfig& c, const std::string& v) {
            const double d = parse_number<double>(section, name, v, "number");
            if (!std::isfinite(d)) bad_value(section, name, v, "finite number");
            c.*group.*field = d;
          }};
}

template <typename T>
Key bool_key(const char* section, const char* name, T RunConfig::*group, bool T::*field) {
  return {section, name, [=](const RunConfig& c) { return std::string(c.*group.*field ? "true" : "false"); },
          [=](RunConfig& c, const std::string& v) {
            if (v == "true" || v == "1" || v == "yes") {
              c.*group.*field = true;
            } else if (v == "false" || v == "0" || v == "no") {
              c.*group.*field = false;
            } else {
              bad_value(section, name, v, "boolean");
            }
          }};
}

template <typename T>
Key string_key(const char* section, const char* name, T RunConfig::*group, std::string T::*field) {
  return {section, name, [=](const RunConfig& c) { return c.*group.*field; },
          [=](RunConfig& c, const std::string& v) { c.*group.*field = v; }};
}

// Nested members (train.adam, train.weights, eval.metrics, eval.fgd) are
// reached through small accessor lambdas.
template <typename Get, typename Field>
Key nested_double(const char* section, const char* name, Get get, Field field) {
  return {section, name, [=](const RunConfig& c) { return fmt::format("{}", get(const_cast<RunConfig&>(c)).*field); },
          [=](RunConfig& c, const std::string& v) {
            const double d = parse_number<double>(section, name, v, "number");
            if (!std::isfinite(d)) bad_value(section, name, v, "finite number");
            get(c).*field = d;
          }};
}

template <typename Get, typename Field>
Key nested_size(const char* section, const char* name, Get get, Field field) {
  return {section, name, [=](const RunConfig& c) { return fmt::format("{}", get(const_cast<RunConfig&>(c)).*field); },
          [=](RunConfig& c, const std::string& v) {
            get(c).*field = parse_number<std::remove_reference_t<decltype(get(c).*field)>>(section, name, v,
                                                                                           "non-negative integer");
          }};
}

const std::vector<Key>& registry() {
  static const std::vector<Key> keys = [] {
    using D = DataConfig;
    using M = ModelConfig;
    using T = TrainConfig;
    using A = AblationFlags;
    using E = EvalConfig;
    auto adam = [](RunConfig& c) -> AdamConfig& { return c.train.adam; };
    auto loss = [](RunConfig& c) -> LossWeights& { return c.train.weights; };
    auto met = [](RunConfig& c) -> MetricsOptions& { return c.eval.metrics; };
    auto cca = [](RunConfig& c) -> CcaOptions& { return c.eval.metrics.cca; };
    auto fgd = [](RunConfig& c) -> FgdModelConfig& { return c.eval.fgd; };
    std::vector<Key> k = {
        string_key("data", "speaker", &RunConfig::data, &D::speaker),
        string_key("data", "vectors", &RunConfig::data, &D::vectors),
        size_key("data", "word_dim", &RunConfig::data, &D::word_dim),
        double_key("data", "fps", &RunConfig::data, &D::fps),
        size_key("data", "max_length_mismatch", &RunConfig::data, &D::max_length_mismatch),
        size_key("data", "window", &RunConfig::data, &D::window),
        size_key("data", "stride", &RunConfig::data, &D::stride),
        bool_key("data", "root_relative", &RunConfig::data, &D::root_relative),
        string_key("data", "left_shoulder", &RunConfig::data, &D::left_shoulder),
        string_key("data", "right_shoulder", &RunConfig::data, &D::right_shoulder),

        size_key("model", "text_width", &RunConfig::model, &M::text_width),
        size_key("model", "audio_width", &RunConfig::model, &M::audio_width),
        size_key("model", "conv_kernel", &RunConfig::model, &M::conv_kernel),
        size_key("model", "hidden", &RunConfig::model, &M::hidden),
        size_key("model", "domain_hidden", &RunConfig::model, &M::domain_hidden),
        size_key("model", "gen_width", &RunConfig::model, &M::gen_width),
        size_key("model", "gen_layers", &RunConfig::model, &M::gen_layers),
        size_key("model", "gen_heads", &RunConfig::model, &M::gen_heads),
        size_key("model", "gen_ff", &RunConfig::model, &M::gen_ff),
        size_key("model", "disc_hidden", &RunConfig::model, &M::disc_hidden),
        size_key("model", "disc_layers", &RunConfig::model, &M::disc_layers),
        {"model", "adversary_target",
         [](const RunConfig& c) {
           return std::string(c.model.adversary_target == AdversaryTarget::kShared ? "shared" : "specific");
         },
         [](RunConfig& c, const std::string& v) {
           if (v == "shared") {
             c.model.adversary_target = AdversaryTarget::kShared;
           } else if (v == "specific") {
             c.model.adversary_target = AdversaryTarget::kSpecific;
           } else {
             bad_value("model", "adversary_target", v, "target (shared or specific)");
           }
         }},

        size_key("train", "epochs", &RunConfig::train, &T::epochs),
        size_key("train", "warmup_epochs", &RunConfig::train, &T::warmup_epochs),
        size_key("train", "batch_size", &RunConfig::train, &T::batch_size),
        size_key("train", "max_steps", &RunConfig::train, &T::max_steps),
        size_key("train", "seed_frames", &RunConfig::train, &T::seed_frames),
        u64_key("train", "seed", &RunConfig::train, &T::seed),
        nested_double("train", "lr", adam, &AdamConfig::lr),
        nested_double("train", "beta1", adam, &AdamConfig::beta1),
        nested_double("train", "beta2", adam, &AdamConfig::beta2),
        nested_double("train", "adam_eps", adam, &AdamConfig::eps),
        bool_key("train", "no_gan", &RunConfig::ablation, &A::no_gan),
        bool_key("train", "no_recon", &RunConfig::ablation, &A::no_recon),
        bool_key("train", "no_domain", &RunConfig::ablation, &A::no_domain),
        bool_key("train", "no_repr", &RunConfig::ablation, &A::no_repr),

        nested_double("loss", "alpha", loss, &LossWeights::alpha),
        nested_double("loss", "beta", loss, &LossWeights::beta),
        nested_double("loss", "gamma", loss, &LossWeights::gamma),
        nested_double("loss", "delta", loss, &LossWeights::delta),
        nested_double("loss", "epsilon", loss, &LossWeights::epsilon),
        nested_double("loss", "huber_delta", loss, &LossWeights::huber_delta),

        nested_size("metrics", "bins", met, &MetricsOptions::bins),
        nested_double("metrics", "ridge", cca, &CcaOptions::ridge),
        size_key("metrics", "length_tolerance", &RunConfig::eval, &E::length_tolerance),
        nested_size("metrics", "fgd_window", fgd, &FgdModelConfig::window),
        nested_size("metrics", "fgd_stride", fgd, &FgdModelConfig::stride),
        nested_size("metrics", "fgd_hidden", fgd, &FgdModelConfig::hidden),
        nested_size("metrics", "fgd_code", fgd, &FgdModelConfig::code),
        nested_size("metrics", "fgd_epochs", fgd, &FgdModelConfig::epochs),
        nested_size("metrics", "fgd_batch_size", fgd, &FgdModelConfig::batch_size),
        nested_size("metrics", "fgd_min_windows", fgd, &FgdModelConfig::min_windows),
        nested_double("metrics", "fgd_lr", fgd, &FgdModelConfig::lr),
        nested_size("metrics", "fgd_seed", fgd, &FgdModelConfig::seed),
    };
    return k;
  }();
  return keys;
}

const Key* find_key(const std::string& section, const std::string& name) {
  for (const Key& k : registry())
    if (section == k.section && name == k.name) return &k;
  return nullptr;
}

void merge_tree(RunConfig& cfg, const pt::ptree& tree) {
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      throw ConfigError(fmt::format("key '{}' must appear inside a [section]", section));
    }
    for (const auto& [name, value] : body) {
      const Key* key = find_key(section, name);
      if (!key) throw ConfigError(fmt::format("unknown configuration key [{}] {}", section, name));
      key->set(cfg, value.data());
    }
  }
}

}  // namespace

void RunConfig::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    merge_string(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void RunConfig::merge_string(const std::string& ini) {
  pt::ptree tree;
  std::istringstream in(ini);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("line {}: {}", e.line(), e.message()));
  }
  merge_tree(*this, tree);
}

void RunConfig::apply_ablations() {
  train.use_gan = !ablation.no_gan;
  train.use_recon = !ablation.no_recon;
  train.use_domain = !ablation.no_domain;
  if (ablation.no_gan) train.weights.gamma = 0.0;
  if (ablation.no_recon) train.weights.epsilon = 0.0;
  if (ablation.no_domain) train.weights.delta = 0.0;
  model.use_repr = !ablation.no_repr;
  model.word_dim = data.word_dim;
}

void RunConfig::validate() const {
  model.validate();
  if (data.fps <= 0.0) throw ConfigError("[data] fps must be positive");
  if (data.window == 0 || data.stride == 0) throw ConfigError("[data] window and stride must be positive");
  if (train.seed_frames >= data.window) throw ConfigError("[train] seed_frames must be shorter than [data] window");
  if (train.batch_size == 0) throw ConfigError("[train] batch_size must be positive");
  if (train.adam.lr <= 0.0) throw ConfigError("[train] lr must be positive");
  if (eval.metrics.bins == 0) throw ConfigError("[metrics] bins must be positive");
  if (eval.fgd.window == 0 || eval.fgd.stride == 0 || eval.fgd.code == 0 || eval.fgd.hidden == 0) {
    throw ConfigError("[metrics] fgd sizes must be positive");
  }
}

std::string RunConfig::to_ini() const {
  std::string out;
  std::string current;
  for (const Key& k : registry()) {
    if (current != k.section) {
      if (!current.empty()) out += '\n';
      current = k.section;
      out += fmt::format("[{}]\n", current);
    }
    out += fmt::format("{} = {}\n", k.name, k.get(*this));
  }
  return out;
}

void RunConfig::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_ini();
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  RunConfig c;
  c.merge_file(path);
  c.apply_ablations();
  return c;
}

}  // namespace cosg::cli
