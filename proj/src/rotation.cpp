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

#include "cosg/rotation.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "cosg/errors.hpp"

namespace cosg {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

int idx(Axis a) { return static_cast<int>(a); }

}  // namespace

Eigen::Matrix3d axis_rotation(Axis axis, double degrees) {
  const double c = std::cos(degrees * kDeg), s = std::sin(degrees * kDeg);
  Eigen::Matrix3d r;
  switch (axis) {
    case Axis::kX: r << 1, 0, 0, 0, c, -s, 0, s, c; break;
    case Axis::kY: r << c, 0, s, 0, 1, 0, -s, 0, c; break;
    case Axis::kZ: r << c, -s, 0, s, c, 0, 0, 0, 1; break;
  }
  return r;
}

Eigen::Matrix3d euler_to_rotmat(const Eigen::Vector3d& angles_deg, const std::vector<Axis>& order) {
  Eigen::Matrix3d r = Eigen::Matrix3d::Identity();
  for (std::size_t k = 0; k < order.size() && k < 3; ++k)
    r = r * axis_rotation(order[k], angles_deg[static_cast<Eigen::Index>(k)]);
  return r;
}

Eigen::Vector3d rotmat_to_euler(const Eigen::Matrix3d& r, const std::vector<Axis>& order) {
  if (order.size() != 3 || order[0] == order[1] || order[1] == order[2] || order[0] == order[2]) {
    throw ConfigError("rotmat_to_euler: order must be a permutation of XYZ, got '" +
                      axis_order_string(order) + "'");
  }
  const int i = idx(order[0]), j = idx(order[1]), k = idx(order[2]);
  // +1 for cyclic orders (XYZ, YZX, ZXY).
  const double sign = ((j - i + 3) % 3 == 1) ? 1.0 : -1.0;
  const double sb = std::clamp(sign * r(i, k), -1.0, 1.0);
  double a, b, c;
  b = std::asin(sb);
  if (std::abs(sb) < 1.0 - 1e-12) {
    a = std::atan2(-sign * r(j, k), r(k, k));
    c = std::atan2(-sign * r(i, j), r(i, i));
  } else {
    // Gimbal lock: only a +/- c is determined; put it all in the first angle.
    c = 0.0;
    a = std::atan2(sign * r(k, j), r(j, j));
  }
  return Eigen::Vector3d(a, b, c) / kDeg;
}

Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& m) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU();
  const Eigen::Matrix3d v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0) u.col(2) *= -1.0;
  return u * v.transpose();
}

std::vector<Axis> parse_axis_order(const std::string& letters) {
  std::vector<Axis> out;
  for (char ch : letters) {
    switch (ch) {
      case 'X': case 'x': out.push_back(Axis::kX); break;
      case 'Y': case 'y': out.push_back(Axis::kY); break;
      case 'Z': case 'z': out.push_back(Axis::kZ); break;
      default: throw ConfigError(std::string("bad axis letter '") + ch + "'");
    }
  }
  return out;
}

std::string axis_order_string(const std::vector<Axis>& order) {
  std::string s;
  for (Axis a : order) s += "XYZ"[idx(a)];
  return s;
}

}  // namespace cosg
