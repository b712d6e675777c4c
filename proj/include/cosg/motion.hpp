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

#include <Eigen/Core>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cosg/rotation.hpp"
#include "cosg/tensor.hpp"

namespace cosg {

enum class Channel { kXposition, kYposition, kZposition, kXrotation, kYrotation, kZrotation };

std::string channel_name(Channel c);

struct Joint {
  std::string name;
  int parent = -1;
  Eigen::Vector3d offset = Eigen::Vector3d::Zero();
  std::vector<Channel> channels;
  std::optional<Eigen::Vector3d> end_site;

  bool has_position() const;
  /// Rotation axes in channel order.
  std::vector<Axis> rotation_order() const;
};

/// Joints in file order; parents precede children.
struct Skeleton {
  std::vector<Joint> joints;

  std::size_t size() const { return joints.size(); }
  /// Index of the joint named `name`, or -1.
  int find(const std::string& name) const;
  std::size_t channel_count() const;
  /// Throws DataError when the hierarchy invariants do not hold.
  void validate() const;
};

/// Per-frame root translation and per-joint local rotations. Rotation
/// triples are Euler angles in degrees in each joint's channel order;
/// translations are stored for joints that carry position channels (always
/// the root after normalisation).
struct MotionClip {
  Skeleton skeleton;
  double fps = 30.0;
  std::size_t frames = 0;
  std::vector<double> translations;  // frames x joints x 3
  std::vector<double> rotations;     // frames x joints x 3

  MotionClip() = default;
  MotionClip(Skeleton skel, double fps, std::size_t frames);

  std::size_t joint_count() const { return skeleton.size(); }
  Eigen::Vector3d translation(std::size_t t, std::size_t j) const;
  void set_translation(std::size_t t, std::size_t j, const Eigen::Vector3d& v);
  Eigen::Vector3d rotation(std::size_t t, std::size_t j) const;
  void set_rotation(std::size_t t, std::size_t j, const Eigen::Vector3d& v);
  Eigen::Vector3d root_position(std::size_t t) const { return translation(t, 0); }
  Eigen::Matrix3d local_rotation(std::size_t t, std::size_t j) const;

  void validate() const;
};

/// Largest absolute difference between two clips over offsets, fps and every
/// channel value; +infinity when the structures differ.
double clip_distance(const MotionClip& a, const MotionClip& b);

// ---------------------------------------------------------------------------
// BVH

MotionClip parse_bvh(std::istream& in);
MotionClip parse_bvh_string(const std::string& text);
MotionClip load_bvh(const std::filesystem::path& path);
void write_bvh(std::ostream& out, const MotionClip& clip);
std::string write_bvh_string(const MotionClip& clip);
void save_bvh(const std::filesystem::path& path, const MotionClip& clip);

// ---------------------------------------------------------------------------
// Kinematics

struct WorldPose {
  std::vector<Eigen::Vector3d> positions;  // per joint
  std::vector<Eigen::Matrix3d> rotations;  // per joint
};

WorldPose world_pose(const MotionClip& clip, std::size_t t);

/// World joint positions, T x J x 3 flattened (rows = frames, cols = J*3).
Tensor forward_kinematics(const MotionClip& clip);

/// Keeps the named joints (any order in `names`; file order is preserved).
/// Each kept joint is re-parented to its nearest kept ancestor; exactly one
/// kept joint may lack one and becomes the root, carrying world translation
/// and rotation. Removed joints between kept ones must not change the
/// relative offset over time.
MotionClip select_joints(const MotionClip& clip, std::span<const std::string> names);

struct FacingJoints {
  std::string left_shoulder = "b_l_shoulder";
  std::string right_shoulder = "b_r_shoulder";
};

struct RootNormalizeInfo {
  double yaw_degrees = 0.0;
  bool degenerate_facing = false;
};

/// Rotates the clip about the vertical (+Y) axis so that the clip-mean facing
/// direction, cross(left - right shoulder, up) projected to the ground plane,
/// points along +Z, and shifts it so frame 0's root sits over the origin.
MotionClip root_normalize(const MotionClip& clip, const FacingJoints& facing = {},
                          RootNormalizeInfo* info = nullptr);

// ---------------------------------------------------------------------------
// Gesture features

inline constexpr std::size_t kGestureJoints = 18;
inline constexpr std::size_t kGestureDim = kGestureJoints * 12;
inline constexpr double kStdFloor = 1e-6;

/// Spine, neck, head and both arm chains (shoulder to wrist) of the
/// challenge skeleton naming scheme.
std::vector<std::string> default_gesture_joints();

/// Column mean and standard deviation (population) of a feature stream.
struct NormStats {
  Tensor mean;
  Tensor std;

  std::size_t dim() const { return mean.size(); }
  void save_csv(const std::filesystem::path& path) const;
  static NormStats load_csv(const std::filesystem::path& path);
};

struct GestureFeatureSeq {
  Tensor frames;  // T x 216
  double fps = 30.0;
  bool normalized = false;
};

struct FeatureOptions {
  bool root_relative = false;
};

/// Per frame and joint: world position (3) then world rotation rows (9).
GestureFeatureSeq gesture_features(const MotionClip& clip, const NormStats* stats = nullptr,
                                   const FeatureOptions& options = {});

/// Pooled per-column statistics over every frame of every input; std is
/// floored at `floor`.
NormStats fit_norm_stats(std::span<const Tensor> features, double floor = kStdFloor);
NormStats fit_norm_stats(std::span<const GestureFeatureSeq> features, double floor = kStdFloor);

Tensor normalize(const Tensor& frames, const NormStats& stats);
Tensor denormalize(const Tensor& frames, const NormStats& stats);

/// Rebuilds a clip on `skeleton` (18 joints) from unnormalised features:
/// rotation blocks are projected to the nearest rotation, converted to local
/// rotations and Euler angles in each joint's channel order; the root takes
/// its translation from the position block.
MotionClip clip_from_features(const Tensor& frames, const Skeleton& skeleton, double fps);

// ---------------------------------------------------------------------------
// Training windows

struct WindowSpec {
  std::size_t length = 100;
  std::size_t stride = 10;
  std::size_t seed = 10;
};

/// Window start frames 0, stride, 2*stride, ... with start + length <= frames.
std::vector<std::size_t> window_starts(std::size_t frames, const WindowSpec& spec);

struct TrainWindow {
  std::size_t start = 0;
  std::size_t seed = 0;            // rows [0, seed) of `gesture` are seed poses
  Tensor gesture;                  // length x D
  std::vector<Tensor> modalities;  // each length x d_m
};

/// Cuts aligned windows from a gesture stream and its companion streams.
/// Returns an empty list when the stream is shorter than one window.
std::vector<TrainWindow> window_samples(const Tensor& gesture, std::span<const Tensor> modalities,
                                        const WindowSpec& spec);

}  // namespace cosg
