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
#include <string>
#include <vector>

namespace cosg {

enum class Axis { kX = 0, kY = 1, kZ = 2 };

/// Elemental right-handed rotation about one axis, angle in degrees.
Eigen::Matrix3d axis_rotation(Axis axis, double degrees);

/// Intrinsic composition R = R_{order[0]}(a0) * R_{order[1]}(a1) * ... with
/// angles in degrees, matching BVH channel semantics. `order` may hold 0-3
/// axes; three distinct axes is the usual case.
Eigen::Matrix3d euler_to_rotmat(const Eigen::Vector3d& angles_deg, const std::vector<Axis>& order);

/// Inverse of euler_to_rotmat for a permutation of the three axes. The middle
/// angle is returned in [-90, 90]; at gimbal lock the last angle is zero.
Eigen::Vector3d rotmat_to_euler(const Eigen::Matrix3d& r, const std::vector<Axis>& order);

/// Nearest rotation matrix in the Frobenius sense (polar decomposition),
/// with det +1 enforced.
Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& m);

std::vector<Axis> parse_axis_order(const std::string& letters);
std::string axis_order_string(const std::vector<Axis>& order);

}  // namespace cosg
