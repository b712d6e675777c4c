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

#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "cosg/errors.hpp"
#include "cosg/motion.hpp"

namespace cosg {
namespace {

struct Token {
  std::string text;
  std::size_t line;
};

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

double parse_number(const std::string& text, std::size_t line) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw ParseError("expected a number, got '" + text + "'", line);
  return v;
}

std::optional<Channel> parse_channel(const std::string& s) {
  if (s == "Xposition") return Channel::kXposition;
  if (s == "Yposition") return Channel::kYposition;
  if (s == "Zposition") return Channel::kZposition;
  if (s == "Xrotation") return Channel::kXrotation;
  if (s == "Yrotation") return Channel::kYrotation;
  if (s == "Zrotation") return Channel::kZrotation;
  return std::nullopt;
}

class HierarchyParser {
 public:
  HierarchyParser(std::vector<Token> tokens, std::size_t end_line)
      : tokens_(std::move(tokens)), end_line_(end_line) {}

  Skeleton parse() {
    expect("HIERARCHY");
    expect("ROOT");
    Skeleton skel;
    parse_joint(skel, -1);
    if (pos_ != tokens_.size()) {
      throw ParseError("unexpected token '" + tokens_[pos_].text + "' after root joint",
                       tokens_[pos_].line);
    }
    return skel;
  }

 private:
  const Token& next(const char* what) {
    if (pos_ >= tokens_.size()) {
      throw ParseError(std::string("unexpected end of hierarchy, expected ") + what, end_line_);
    }
    return tokens_[pos_++];
  }

  void expect(const char* word) {
    const Token& t = next(word);
    if (t.text != word) {
      throw ParseError(std::string("expected '") + word + "', got '" + t.text + "'", t.line);
    }
  }

  Eigen::Vector3d parse_vec3() {
    Eigen::Vector3d v;
    for (int k = 0; k < 3; ++k) {
      const Token& t = next("a number");
      v[k] = parse_number(t.text, t.line);
    }
    return v;
  }

  void parse_joint(Skeleton& skel, int parent) {
    const Token& name = next("joint name");
    Joint joint;
    joint.name = name.text;
    joint.parent = parent;
    const int index = static_cast<int>(skel.joints.size());
    skel.joints.push_back(joint);
    expect("{");
    expect("OFFSET");
    skel.joints[index].offset = parse_vec3();
    if (pos_ < tokens_.size() && tokens_[pos_].text == "CHANNELS") {
      ++pos_;
      const Token& count_tok = next("channel count");
      const double count = parse_number(count_tok.text, count_tok.line);
      if (count < 0 || count > 6 || count != static_cast<int>(count)) {
        throw ParseError("bad channel count '" + count_tok.text + "'", count_tok.line);
      }
      for (int c = 0; c < static_cast<int>(count); ++c) {
        const Token& ch = next("channel name");
        const auto parsed = parse_channel(ch.text);
        if (!parsed) throw ParseError("unknown channel '" + ch.text + "'", ch.line);
        skel.joints[index].channels.push_back(*parsed);
      }
    }
    while (true) {
      const Token& t = next("'}'");
      if (t.text == "}") return;
      if (t.text == "JOINT") {
        parse_joint(skel, index);
      } else if (t.text == "End") {
        expect("Site");
        expect("{");
        expect("OFFSET");
        skel.joints[index].end_site = parse_vec3();
        expect("}");
      } else {
        throw ParseError("unexpected token '" + t.text + "' in joint " + skel.joints[index].name,
                         t.line);
      }
    }
  }

  std::vector<Token> tokens_;
  std::size_t end_line_;
  std::size_t pos_ = 0;
};

std::string fmt_num(double v) {
  std::string s = fmt::format("{:.8f}", v);
  if (s == "-0.00000000") s = "0.00000000";
  return s;
}

void write_joint(std::ostream& out, const Skeleton& skel, std::size_t j, int depth) {
  const std::string ind(static_cast<std::size_t>(depth), '\t');
  const Joint& joint = skel.joints[j];
  out << ind << (joint.parent < 0 ? "ROOT " : "JOINT ") << joint.name << "\n" << ind << "{\n";
  out << ind << "\tOFFSET " << fmt_num(joint.offset.x()) << " " << fmt_num(joint.offset.y()) << " "
      << fmt_num(joint.offset.z()) << "\n";
  if (!joint.channels.empty()) {
    out << ind << "\tCHANNELS " << joint.channels.size();
    for (Channel c : joint.channels) out << " " << channel_name(c);
    out << "\n";
  }
  for (std::size_t k = j + 1; k < skel.size(); ++k)
    if (skel.joints[k].parent == static_cast<int>(j)) write_joint(out, skel, k, depth + 1);
  if (joint.end_site) {
    out << ind << "\tEnd Site\n" << ind << "\t{\n";
    out << ind << "\t\tOFFSET " << fmt_num(joint.end_site->x()) << " " << fmt_num(joint.end_site->y())
        << " " << fmt_num(joint.end_site->z()) << "\n";
    out << ind << "\t}\n";
  }
  out << ind << "}\n";
}

}  // namespace

std::string channel_name(Channel c) {
  switch (c) {
    case Channel::kXposition: return "Xposition";
    case Channel::kYposition: return "Yposition";
    case Channel::kZposition: return "Zposition";
    case Channel::kXrotation: return "Xrotation";
    case Channel::kYrotation: return "Yrotation";
    case Channel::kZrotation: return "Zrotation";
  }
  return "?";
}

MotionClip parse_bvh(std::istream& in) {
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  std::vector<Token> tokens;
  std::size_t motion_line = lines.size();
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto words = split_ws(lines[i]);
    if (!words.empty() && words.front() == "MOTION") {
      motion_line = i;
      break;
    }
    for (const auto& w : words) tokens.push_back({w, i + 1});
  }
  if (tokens.empty() || tokens.front().text != "HIERARCHY") {
    throw ParseError("missing HIERARCHY section", tokens.empty() ? 1 : tokens.front().line);
  }
  if (motion_line == lines.size()) throw ParseError("missing MOTION section", lines.size());
  Skeleton skel = HierarchyParser(std::move(tokens), motion_line + 1).parse();
  skel.validate();

  std::size_t i = motion_line + 1;
  auto next_words = [&](const char* what) {
    while (i < lines.size()) {
      auto words = split_ws(lines[i++]);
      if (!words.empty()) return words;
    }
    throw ParseError(std::string("unexpected end of file, expected ") + what, lines.size());
  };
  auto header = next_words("'Frames:'");
  if (header.size() != 2 || header[0] != "Frames:") throw ParseError("expected 'Frames: <count>'", i);
  const double frame_count = parse_number(header[1], i);
  if (frame_count < 1 || frame_count != static_cast<double>(static_cast<std::size_t>(frame_count))) {
    throw ParseError("frame count must be a positive integer", i);
  }
  header = next_words("'Frame Time:'");
  if (header.size() != 3 || header[0] != "Frame" || header[1] != "Time:") {
    throw ParseError("expected 'Frame Time: <seconds>'", i);
  }
  const double frame_time = parse_number(header[2], i);
  if (!(frame_time > 0)) throw ParseError("frame time must be positive", i);

  MotionClip clip(std::move(skel), 1.0 / frame_time, static_cast<std::size_t>(frame_count));
  const std::size_t width = clip.skeleton.channel_count();
  std::size_t t = 0;
  for (; i < lines.size() && t < clip.frames; ++i) {
    const auto words = split_ws(lines[i]);
    if (words.empty()) continue;
    if (words.size() != width) {
      throw ParseError("frame row " + std::to_string(t + 1) + " has " + std::to_string(words.size()) +
                           " values, expected " + std::to_string(width),
                       i + 1);
    }
    std::size_t w = 0;
    for (std::size_t j = 0; j < clip.joint_count(); ++j) {
      Eigen::Vector3d pos = Eigen::Vector3d::Zero(), rot = Eigen::Vector3d::Zero();
      int slot = 0;
      for (Channel c : clip.skeleton.joints[j].channels) {
        const double v = parse_number(words[w++], i + 1);
        switch (c) {
          case Channel::kXposition: pos.x() = v; break;
          case Channel::kYposition: pos.y() = v; break;
          case Channel::kZposition: pos.z() = v; break;
          default: rot[slot++] = v; break;
        }
      }
      clip.set_translation(t, j, pos);
      clip.set_rotation(t, j, rot);
    }
    ++t;
  }
  if (t < clip.frames) {
    throw ParseError("file ends after " + std::to_string(t) + " of " + std::to_string(clip.frames) +
                         " frame rows",
                     lines.size());
  }
  for (; i < lines.size(); ++i) {
    if (!split_ws(lines[i]).empty()) {
      throw ParseError("extra frame row beyond declared count " + std::to_string(clip.frames), i + 1);
    }
  }
  clip.validate();
  return clip;
}

MotionClip parse_bvh_string(const std::string& text) {
  std::istringstream in(text);
  return parse_bvh(in);
}

MotionClip load_bvh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open BVH file " + path.string());
  try {
    return parse_bvh(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string(), e);
  }
}

void write_bvh(std::ostream& out, const MotionClip& clip) {
  clip.validate();
  out << "HIERARCHY\n";
  write_joint(out, clip.skeleton, 0, 0);
  out << "MOTION\n";
  out << "Frames: " << clip.frames << "\n";
  out << "Frame Time: " << fmt::format("{:.10f}", 1.0 / clip.fps) << "\n";
  std::string row;
  for (std::size_t t = 0; t < clip.frames; ++t) {
    row.clear();
    for (std::size_t j = 0; j < clip.joint_count(); ++j) {
      const Eigen::Vector3d pos = clip.translation(t, j);
      const Eigen::Vector3d rot = clip.rotation(t, j);
      int slot = 0;
      for (Channel c : clip.skeleton.joints[j].channels) {
        double v = 0.0;
        switch (c) {
          case Channel::kXposition: v = pos.x(); break;
          case Channel::kYposition: v = pos.y(); break;
          case Channel::kZposition: v = pos.z(); break;
          default: v = rot[slot++]; break;
        }
        if (!row.empty()) row += ' ';
        row += fmt_num(v);
      }
    }
    out << row << "\n";
  }
}

std::string write_bvh_string(const MotionClip& clip) {
  std::ostringstream out;
  write_bvh(out, clip);
  return out.str();
}

void save_bvh(const std::filesystem::path& path, const MotionClip& clip) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  write_bvh(out, clip);
}

}  // namespace cosg
