// Copyright 2026 The sampid Authors
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

#ifndef SAMPID_STATE_HPP_
#define SAMPID_STATE_HPP_

#include <Eigen/Dense>
#include <cmath>
#include <string>

namespace sampid {

// Floating-base plus joint state. Orientation is a unit quaternion stored
// scalar-first (w, x, y, z); angular velocity is expressed in the world
// frame.
struct SimState {
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  Eigen::Vector4d quat{1.0, 0.0, 0.0, 0.0};
  Eigen::Vector3d v = Eigen::Vector3d::Zero();
  Eigen::Vector3d omega = Eigen::Vector3d::Zero();
  Eigen::VectorXd q_jnt;
  Eigen::VectorXd dq_jnt;
  double t = 0.0;

  // Name of the first non-finite field, or empty when all are finite.
  std::string FirstNonFinite() const {
    if (!p.allFinite()) return "p";
    if (!quat.allFinite()) return "quat";
    if (!v.allFinite()) return "v";
    if (!omega.allFinite()) return "omega";
    if (!q_jnt.allFinite()) return "q_jnt";
    if (!dq_jnt.allFinite()) return "dq_jnt";
    if (!std::isfinite(t)) return "t";
    return {};
  }
};

struct ControlInput {
  Eigen::VectorXd q_target;
};

// Quaternion helpers (scalar-first).
inline Eigen::Vector4d PitchQuat(double pitch) {
  return {std::cos(0.5 * pitch), 0.0, std::sin(0.5 * pitch), 0.0};
}

inline double QuatPitch(const Eigen::Vector4d& q) {
  return 2.0 * std::atan2(q(2), q(0));
}

inline Eigen::Vector4d QuatMultiply(const Eigen::Vector4d& a,
                                    const Eigen::Vector4d& b) {
  return {a(0) * b(0) - a(1) * b(1) - a(2) * b(2) - a(3) * b(3),
          a(0) * b(1) + a(1) * b(0) + a(2) * b(3) - a(3) * b(2),
          a(0) * b(2) - a(1) * b(3) + a(2) * b(0) + a(3) * b(1),
          a(0) * b(3) + a(1) * b(2) - a(2) * b(1) + a(3) * b(0)};
}

inline Eigen::Vector4d QuatConjugate(const Eigen::Vector4d& q) {
  return {q(0), -q(1), -q(2), -q(3)};
}

// Rotation vector of the relative rotation a^-1 * b, taken on the short arc
// so that q and -q give the same result.
inline Eigen::Vector3d QuatLogDifference(const Eigen::Vector4d& a,
                                         const Eigen::Vector4d& b) {
  Eigen::Vector4d d = QuatMultiply(QuatConjugate(a), b);
  if (d(0) < 0.0) d = -d;
  const Eigen::Vector3d xyz = d.tail<3>();
  const double s = xyz.norm();
  if (s < 1e-12) return 2.0 * xyz;
  return 2.0 * std::atan2(s, d(0)) / s * xyz;
}

}  // namespace sampid

#endif  // SAMPID_STATE_HPP_
