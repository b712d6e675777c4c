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

#include "cosg/motion.hpp"

#include <fmt/format.h>

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "cosg/errors.hpp"

namespace cosg {
namespace {

bool is_position(Channel c) {
  return c == Channel::kXposition || c == Channel::kYposition || c == Channel::kZposition;
}

Axis rotation_axis(Channel c) {
  switch (c) {
    case Channel::kXrotation: return Axis::kX;
    case Channel::kYrotation: return Axis::kY;
    default: return Axis::kZ;
  }
}

std::vector<Channel> rotation_channels(const std::vector<Axis>& order) {
  std::vector<Channel> out;
  for (Axis a : order) {
    switch (a) {
      case Axis::kX: out.push_back(Channel::kXrotation); break;
      case Axis::kY: out.push_back(Channel::kYrotation); break;
      case Axis::kZ: out.push_back(Channel::kZrotation); break;
    }
  }
  return out;
}

const std::vector<Axis> kDefaultOrder = {Axis::kZ, Axis::kX, Axis::kY};

std::vector<Channel> root_channels(const std::vector<Axis>& order) {
  std::vector<Channel> ch = {Channel::kXposition, Channel::kYposition, Channel::kZposition};
  const auto rot = rotation_channels(order.size() == 3 ? order : kDefaultOrder);
  ch.insert(ch.end(), rot.begin(), rot.end());
  return ch;
}

}  // namespace

// ---------------------------------------------------------------------------
// Skeleton and clip

bool Joint::has_position() const {
  return std::any_of(channels.begin(), channels.end(), is_position);
}

std::vector<Axis> Joint::rotation_order() const {
  std::vector<Axis> order;
  for (Channel c : channels)
    if (!is_position(c)) order.push_back(rotation_axis(c));
  return order;
}

int Skeleton::find(const std::string& name) const {
  for (std::size_t i = 0; i < joints.size(); ++i)
    if (joints[i].name == name) return static_cast<int>(i);
  return -1;
}

std::size_t Skeleton::channel_count() const {
  std::size_t n = 0;
  for (const auto& j : joints) n += j.channels.size();
  return n;
}

void Skeleton::validate() const {
  if (joints.empty()) throw DataError("skeleton has no joints");
  if (joints[0].parent != -1) throw DataError("first joint must be the root");
  for (std::size_t i = 0; i < joints.size(); ++i) {
    const Joint& j = joints[i];
    if (i > 0 && (j.parent < 0 || j.parent >= static_cast<int>(i))) {
      throw DataError("joint " + j.name + " must have a parent that precedes it");
    }
    if (!j.offset.allFinite()) throw DataError("joint " + j.name + " has a non-finite offset");
    const auto order = j.rotation_order();
    for (std::size_t a = 0; a < order.size(); ++a)
      for (std::size_t b = a + 1; b < order.size(); ++b)
        if (order[a] == order[b]) throw DataError("joint " + j.name + " repeats a rotation axis");
  }
}

MotionClip::MotionClip(Skeleton skel, double fps_, std::size_t frames_)
    : skeleton(std::move(skel)),
      fps(fps_),
      frames(frames_),
      translations(frames_ * skeleton.size() * 3, 0.0),
      rotations(frames_ * skeleton.size() * 3, 0.0) {}

Eigen::Vector3d MotionClip::translation(std::size_t t, std::size_t j) const {
  const double* p = translations.data() + (t * joint_count() + j) * 3;
  return {p[0], p[1], p[2]};
}

void MotionClip::set_translation(std::size_t t, std::size_t j, const Eigen::Vector3d& v) {
  double* p = translations.data() + (t * joint_count() + j) * 3;
  p[0] = v.x(), p[1] = v.y(), p[2] = v.z();
}

Eigen::Vector3d MotionClip::rotation(std::size_t t, std::size_t j) const {
  const double* p = rotations.data() + (t * joint_count() + j) * 3;
  return {p[0], p[1], p[2]};
}

void MotionClip::set_rotation(std::size_t t, std::size_t j, const Eigen::Vector3d& v) {
  double* p = rotations.data() + (t * joint_count() + j) * 3;
  p[0] = v.x(), p[1] = v.y(), p[2] = v.z();
}

Eigen::Matrix3d MotionClip::local_rotation(std::size_t t, std::size_t j) const {
  return euler_to_rotmat(rotation(t, j), skeleton.joints[j].rotation_order());
}

void MotionClip::validate() const {
  skeleton.validate();
  if (frames < 1) throw DataError("motion clip has no frames");
  if (!(fps > 0) || !std::isfinite(fps)) throw DataError("motion clip fps must be positive");
  const std::size_t n = frames * joint_count() * 3;
  if (translations.size() != n || rotations.size() != n) {
    throw DimensionError("motion clip buffers do not match frames x joints");
  }
  for (double v : rotations)
    if (!std::isfinite(v)) throw DataError("motion clip has a non-finite rotation");
  for (double v : translations)
    if (!std::isfinite(v)) throw DataError("motion clip has a non-finite translation");
}

double clip_distance(const MotionClip& a, const MotionClip& b) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  if (a.frames != b.frames || a.joint_count() != b.joint_count()) return kInf;
  double d = std::abs(a.fps - b.fps);
  for (std::size_t j = 0; j < a.joint_count(); ++j) {
    const Joint& x = a.skeleton.joints[j];
    const Joint& y = b.skeleton.joints[j];
    if (x.name != y.name || x.parent != y.parent || x.channels != y.channels ||
        x.end_site.has_value() != y.end_site.has_value()) {
      return kInf;
    }
    d = std::max(d, (x.offset - y.offset).cwiseAbs().maxCoeff());
    if (x.end_site) d = std::max(d, (*x.end_site - *y.end_site).cwiseAbs().maxCoeff());
  }
  for (std::size_t t = 0; t < a.frames; ++t) {
    for (std::size_t j = 0; j < a.joint_count(); ++j) {
      if (a.skeleton.joints[j].has_position())
        d = std::max(d, (a.translation(t, j) - b.translation(t, j)).cwiseAbs().maxCoeff());
      d = std::max(d, (a.rotation(t, j) - b.rotation(t, j)).cwiseAbs().maxCoeff());
    }
  }
  return d;
}

// ---------------------------------------------------------------------------
// Kinematics

WorldPose world_pose(const MotionClip& clip, std::size_t t) {
  const std::size_t n = clip.joint_count();
  WorldPose pose;
  pose.positions.resize(n);
  pose.rotations.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const Joint& joint = clip.skeleton.joints[j];
    const Eigen::Vector3d local_t = joint.has_position() ? clip.translation(t, j) : joint.offset;
    const Eigen::Matrix3d local_r = clip.local_rotation(t, j);
    if (joint.parent < 0) {
      pose.positions[j] = local_t;
      pose.rotations[j] = local_r;
    } else {
      const auto p = static_cast<std::size_t>(joint.parent);
      pose.positions[j] = pose.positions[p] + pose.rotations[p] * local_t;
      pose.rotations[j] = pose.rotations[p] * local_r;
    }
  }
  return pose;
}

Tensor forward_kinematics(const MotionClip& clip) {
  const std::size_t n = clip.joint_count();
  Tensor out(clip.frames, n * 3);
  for (std::size_t t = 0; t < clip.frames; ++t) {
    const WorldPose pose = world_pose(clip, t);
    for (std::size_t j = 0; j < n; ++j)
      for (int k = 0; k < 3; ++k) out(t, j * 3 + static_cast<std::size_t>(k)) = pose.positions[j][k];
  }
  return out;
}

MotionClip select_joints(const MotionClip& clip, std::span<const std::string> names) {
  const Skeleton& src = clip.skeleton;
  std::vector<bool> keep(src.size(), false);
  for (const auto& name : names) {
    const int j = src.find(name);
    if (j < 0) throw ConfigError("joint '" + name + "' not found in skeleton");
    keep[static_cast<std::size_t>(j)] = true;
  }
  std::vector<int> new_index(src.size(), -1);
  std::vector<std::size_t> kept;
  for (std::size_t j = 0; j < src.size(); ++j) {
    if (!keep[j]) continue;
    new_index[j] = static_cast<int>(kept.size());
    kept.push_back(j);
  }
  // Nearest kept ancestor in the source skeleton.
  auto kept_ancestor = [&](std::size_t j) {
    int p = src.joints[j].parent;
    while (p >= 0 && !keep[static_cast<std::size_t>(p)]) p = src.joints[static_cast<std::size_t>(p)].parent;
    return p;
  };
  Skeleton dst;
  std::vector<int> src_parent(kept.size());
  std::size_t roots = 0;
  for (std::size_t k = 0; k < kept.size(); ++k) {
    const Joint& j = src.joints[kept[k]];
    Joint nj;
    nj.name = j.name;
    src_parent[k] = kept_ancestor(kept[k]);
    const auto order = j.rotation_order();
    if (src_parent[k] < 0) {
      ++roots;
      nj.parent = -1;
      nj.channels = root_channels(order);
    } else {
      nj.parent = new_index[static_cast<std::size_t>(src_parent[k])];
      nj.channels = rotation_channels(order.size() == 3 ? order : kDefaultOrder);
    }
    dst.joints.push_back(std::move(nj));
  }
  if (roots != 1) {
    throw ConfigError("selected joints must have exactly one top-level joint, found " +
                      std::to_string(roots));
  }
  if (dst.joints[0].parent != -1) throw ConfigError("the top-level selected joint must come first");

  MotionClip out(dst, clip.fps, clip.frames);
  std::vector<Eigen::Vector3d> offsets(kept.size(), Eigen::Vector3d::Zero());
  for (std::size_t t = 0; t < clip.frames; ++t) {
    const WorldPose pose = world_pose(clip, t);
    for (std::size_t k = 0; k < kept.size(); ++k) {
      const std::size_t j = kept[k];
      const auto order = out.skeleton.joints[k].rotation_order();
      if (src_parent[k] < 0) {
        out.set_translation(t, k, pose.positions[j]);
        out.set_rotation(t, k, rotmat_to_euler(pose.rotations[j], order));
        continue;
      }
      const auto p = static_cast<std::size_t>(src_parent[k]);
      const Eigen::Matrix3d pr = pose.rotations[p];
      const Eigen::Vector3d off = pr.transpose() * (pose.positions[j] - pose.positions[p]);
      if (t == 0) {
        offsets[k] = off;
      } else if ((off - offsets[k]).norm() > 1e-6 * std::max(1.0, offsets[k].norm())) {
        throw DataError("joint " + src.joints[j].name +
                        " moves relative to its selected parent; cannot drop the joints between them");
      }
      out.set_rotation(t, k, rotmat_to_euler(pr.transpose() * pose.rotations[j], order));
    }
  }
  for (std::size_t k = 0; k < kept.size(); ++k) {
    Joint& nj = out.skeleton.joints[k];
    const Joint& j = src.joints[kept[k]];
    nj.offset = src_parent[k] < 0 ? Eigen::Vector3d::Zero() : offsets[k];
    const bool has_child = std::any_of(out.skeleton.joints.begin(), out.skeleton.joints.end(),
                                       [&](const Joint& c) { return c.parent == static_cast<int>(k); });
    if (has_child) continue;
    if (j.end_site) {
      nj.end_site = j.end_site;
    } else {
      nj.end_site = Eigen::Vector3d::Zero();
      for (std::size_t c = kept[k] + 1; c < src.size(); ++c) {
        if (src.joints[c].parent == static_cast<int>(kept[k])) {
          nj.end_site = src.joints[c].offset;
          break;
        }
      }
    }
  }
  out.validate();
  return out;
}

MotionClip root_normalize(const MotionClip& clip, const FacingJoints& facing, RootNormalizeInfo* info) {
  const int left = clip.skeleton.find(facing.left_shoulder);
  const int right = clip.skeleton.find(facing.right_shoulder);
  if (left < 0 || right < 0) {
    throw ConfigError("root_normalize: shoulder joints '" + facing.left_shoulder + "' / '" +
                      facing.right_shoulder + "' not in skeleton");
  }
  const Eigen::Vector3d up(0, 1, 0);
  Eigen::Vector3d mean_facing = Eigen::Vector3d::Zero();
  for (std::size_t t = 0; t < clip.frames; ++t) {
    const WorldPose pose = world_pose(clip, t);
    const Eigen::Vector3d across = pose.positions[static_cast<std::size_t>(left)] -
                                   pose.positions[static_cast<std::size_t>(right)];
    mean_facing += across.cross(up);
  }
  mean_facing /= static_cast<double>(clip.frames);
  mean_facing.y() = 0.0;

  RootNormalizeInfo local;
  double yaw = 0.0;
  if (mean_facing.norm() < 1e-9) {
    local.degenerate_facing = true;
  } else {
    yaw = -std::atan2(mean_facing.x(), mean_facing.z()) * 180.0 / std::numbers::pi;
  }
  local.yaw_degrees = yaw;
  if (info) *info = local;

  MotionClip out = clip;
  Joint& root = out.skeleton.joints[0];
  const auto order = root.rotation_order();
  if (order.size() != 3 && !order.empty()) {
    throw DataError("root joint " + root.name + " must have zero or three rotation channels");
  }
  if (!root.has_position() || order.empty()) {
    root.channels = root_channels(order);
    for (std::size_t t = 0; t < out.frames; ++t) {
      if (!clip.skeleton.joints[0].has_position()) out.set_translation(t, 0, clip.skeleton.joints[0].offset);
    }
  }
  const auto new_order = root.rotation_order();
  const Eigen::Matrix3d turn = axis_rotation(Axis::kY, yaw);
  Eigen::Vector3d origin = out.root_position(0);
  origin.y() = 0.0;
  for (std::size_t t = 0; t < out.frames; ++t) {
    const Eigen::Matrix3d r = turn * clip.local_rotation(t, 0);
    out.set_rotation(t, 0, rotmat_to_euler(r, new_order));
    out.set_translation(t, 0, turn * (out.root_position(t) - origin));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Features and normalisation

std::vector<std::string> default_gesture_joints() {
  std::vector<std::string> names = {"b_spine0", "b_spine1", "b_spine2", "b_spine3", "b_neck0", "b_head"};
  for (const char* side : {"r", "l"}) {
    for (const char* part : {"shoulder", "arm", "arm_twist", "forearm", "wrist_twist", "wrist"}) {
      names.push_back(fmt::format("b_{}_{}", side, part));
    }
  }
  return names;
}

GestureFeatureSeq gesture_features(const MotionClip& clip, const NormStats* stats,
                                   const FeatureOptions& options) {
  if (clip.joint_count() != kGestureJoints) {
    throw ConfigError("gesture features need " + std::to_string(kGestureJoints) + " joints, clip has " +
                      std::to_string(clip.joint_count()));
  }
  GestureFeatureSeq seq;
  seq.fps = clip.fps;
  seq.frames = Tensor(clip.frames, kGestureDim);
  for (std::size_t t = 0; t < clip.frames; ++t) {
    const WorldPose pose = world_pose(clip, t);
    double* row = seq.frames.data() + t * kGestureDim;
    for (std::size_t j = 0; j < kGestureJoints; ++j) {
      Eigen::Vector3d p = pose.positions[j];
      if (options.root_relative) p -= pose.positions[0];
      double* block = row + j * 12;
      for (int k = 0; k < 3; ++k) block[k] = p[k];
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) block[3 + r * 3 + c] = pose.rotations[j](r, c);
    }
  }
  if (stats) {
    seq.frames = normalize(seq.frames, *stats);
    seq.normalized = true;
  }
  return seq;
}

NormStats fit_norm_stats(std::span<const Tensor> features, double floor) {
  if (features.empty()) throw DataError("fit_norm_stats: no input sequences");
  const std::size_t d = features.front().cols();
  std::size_t n = 0;
  for (const auto& f : features) {
    if (f.cols() != d) throw DimensionError("fit_norm_stats: inputs differ in width");
    n += f.rows();
  }
  if (n < 2) throw DataError("fit_norm_stats: need at least 2 frames, got " + std::to_string(n));
  NormStats s{Tensor(Shape{d}), Tensor(Shape{d})};
  for (const auto& f : features)
    for (std::size_t t = 0; t < f.rows(); ++t)
      for (std::size_t c = 0; c < d; ++c) s.mean[c] += f(t, c);
  for (std::size_t c = 0; c < d; ++c) s.mean[c] /= static_cast<double>(n);
  for (const auto& f : features)
    for (std::size_t t = 0; t < f.rows(); ++t)
      for (std::size_t c = 0; c < d; ++c) s.std[c] += (f(t, c) - s.mean[c]) * (f(t, c) - s.mean[c]);
  for (std::size_t c = 0; c < d; ++c)
    s.std[c] = std::max(floor, std::sqrt(s.std[c] / static_cast<double>(n)));
  return s;
}

NormStats fit_norm_stats(std::span<const GestureFeatureSeq> features, double floor) {
  std::vector<Tensor> frames;
  frames.reserve(features.size());
  for (const auto& f : features) {
    if (f.normalized) throw DataError("fit_norm_stats: inputs must be unnormalized");
    frames.push_back(f.frames);
  }
  return fit_norm_stats(std::span<const Tensor>(frames), floor);
}

Tensor normalize(const Tensor& frames, const NormStats& stats) {
  if (frames.cols() != stats.dim()) {
    throw DimensionError("normalize: features " + shape_string(frames.shape()) + " vs stats of width " +
                         std::to_string(stats.dim()));
  }
  Tensor out = frames;
  const std::size_t d = stats.dim();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (out[i] - stats.mean[i % d]) / stats.std[i % d];
  return out;
}

Tensor denormalize(const Tensor& frames, const NormStats& stats) {
  if (frames.cols() != stats.dim()) {
    throw DimensionError("denormalize: features " + shape_string(frames.shape()) +
                         " vs stats of width " + std::to_string(stats.dim()));
  }
  Tensor out = frames;
  const std::size_t d = stats.dim();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] * stats.std[i % d] + stats.mean[i % d];
  return out;
}

void NormStats::save_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  for (const Tensor* row : {&mean, &std}) {
    for (std::size_t c = 0; c < row->size(); ++c) out << (c ? "," : "") << fmt::format("{:.17g}", (*row)[c]);
    out << "\n";
  }
}

NormStats NormStats::load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open normalization stats " + path.string());
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw ParseError("bad number '" + cell + "' in " + path.string(), line_no);
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.size() != 2 || rows[0].size() != rows[1].size() || rows[0].empty()) {
    throw DataError(path.string() + ": expected two rows (mean, std) of equal width");
  }
  const std::size_t d = rows[0].size();
  return NormStats{Tensor(Shape{d}, rows[0]), Tensor(Shape{d}, rows[1])};
}

MotionClip clip_from_features(const Tensor& frames, const Skeleton& skeleton, double fps) {
  if (skeleton.size() != kGestureJoints || frames.cols() != kGestureDim) {
    throw ConfigError("clip_from_features needs an 18-joint skeleton and 216-wide features");
  }
  Skeleton skel = skeleton;
  if (!skel.joints[0].has_position() || skel.joints[0].rotation_order().size() != 3) {
    skel.joints[0].channels = root_channels(skel.joints[0].rotation_order());
  }
  MotionClip clip(skel, fps, frames.rows());
  std::vector<Eigen::Matrix3d> world(kGestureJoints);
  for (std::size_t t = 0; t < frames.rows(); ++t) {
    for (std::size_t j = 0; j < kGestureJoints; ++j) {
      const double* block = frames.data() + t * kGestureDim + j * 12;
      Eigen::Matrix3d m;
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) m(r, c) = block[3 + r * 3 + c];
      world[j] = nearest_rotation(m);
      const Joint& joint = clip.skeleton.joints[j];
      auto order = joint.rotation_order();
      if (order.size() != 3) order = kDefaultOrder;
      if (joint.parent < 0) {
        clip.set_translation(t, j, Eigen::Vector3d(block[0], block[1], block[2]));
        clip.set_rotation(t, j, rotmat_to_euler(world[j], order));
      } else {
        const Eigen::Matrix3d local = world[static_cast<std::size_t>(joint.parent)].transpose() * world[j];
        clip.set_rotation(t, j, rotmat_to_euler(local, order));
      }
    }
  }
  for (auto& j : clip.skeleton.joints) {
    if (j.parent >= 0 && j.rotation_order().size() != 3) j.channels = rotation_channels(kDefaultOrder);
  }
  clip.validate();
  return clip;
}

// ---------------------------------------------------------------------------
// Windows

std::vector<std::size_t> window_starts(std::size_t frames, const WindowSpec& spec) {
  if (spec.length <= spec.seed) throw ConfigError("window length must exceed the seed length");
  if (spec.stride < 1) throw ConfigError("window stride must be at least 1");
  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s + spec.length <= frames; s += spec.stride) starts.push_back(s);
  return starts;
}

std::vector<TrainWindow> window_samples(const Tensor& gesture, std::span<const Tensor> modalities,
                                        const WindowSpec& spec) {
  for (const auto& m : modalities) {
    if (m.rows() != gesture.rows()) {
      throw DimensionError("window_samples: modality with " + std::to_string(m.rows()) +
                           " frames vs gesture with " + std::to_string(gesture.rows()));
    }
  }
  std::vector<TrainWindow> out;
  for (std::size_t s : window_starts(gesture.rows(), spec)) {
    TrainWindow w;
    w.start = s;
    w.seed = spec.seed;
    w.gesture = gesture.slice_rows(s, spec.length);
    for (const auto& m : modalities) w.modalities.push_back(m.slice_rows(s, spec.length));
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace cosg
