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

// The identification decision vector and the normalized search box the
// optimizer works in.
//
// Flat layout: [phi (10) | actuator gains (k)] where k depends on the motor
// model (grouped tanh: one per joint group, unified tanh / linear gain: one,
// ideal: none).

#ifndef SAMPID_PARAMS_HPP_
#define SAMPID_PARAMS_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "sampid/actuator.hpp"
#include "sampid/errors.hpp"
#include "sampid/inertia.hpp"

namespace sampid {

struct ParamSlice {
  std::string name;
  int offset = 0;
  int size = 0;
};

struct ParamVector {
  LogCholeskyVector phi;
  Eigen::VectorXd actuator;  // kappa (N m) or linear gain (dimensionless)
  MotorModelKind motor = MotorModelKind::kGroupedTanh;

  int Size() const { return 10 + static_cast<int>(actuator.size()); }

  Eigen::VectorXd Flat() const {
    Eigen::VectorXd v(Size());
    v.head<10>() = phi.phi;
    v.tail(actuator.size()) = actuator;
    return v;
  }

  static ParamVector FromFlat(const Eigen::VectorXd& flat,
                              MotorModelKind motor) {
    if (flat.size() < 10) throw InvalidArgument("parameter vector too short");
    ParamVector p;
    p.motor = motor;
    p.phi.phi = flat.head<10>();
    p.actuator = flat.tail(flat.size() - 10);
    return p;
  }

  static ParamVector FromInertial(const InertialParams& inertial,
                                  const Eigen::VectorXd& actuator,
                                  MotorModelKind motor) {
    ParamVector p;
    p.phi = InertialToPhi(inertial);
    p.actuator = actuator;
    p.motor = motor;
    return p;
  }

  InertialParams Inertial() const { return PhiToInertial(phi); }

  std::string ActuatorSliceName() const {
    return motor == MotorModelKind::kLinearGain ? "kappa_s" : "kappa";
  }

  std::vector<ParamSlice> Layout() const {
    std::vector<ParamSlice> slices{{"phi", 0, 10}};
    if (actuator.size() > 0)
      slices.push_back(
          {ActuatorSliceName(), 10, static_cast<int>(actuator.size())});
    return slices;
  }

  std::string CoordinateName(int i) const {
    if (i < 10) return LogCholeskyVector::kNames[static_cast<std::size_t>(i)];
    return ActuatorSliceName() + std::to_string(i - 10);
  }

  // Saturation gains in the per-group form the actuator model expects.
  SaturationGains Saturation(const std::vector<int>& group_map) const {
    SaturationGains s;
    s.kappa = actuator;
    s.group_map = group_map;
    return s;
  }
};

// Physical sampling ranges (per body, base link).
struct PhysicalBounds {
  double mass_min = 3.0, mass_max = 15.0;
  Eigen::Vector3d com_min = Eigen::Vector3d::Constant(-0.1);
  Eigen::Vector3d com_max = Eigen::Vector3d::Constant(0.1);
  Eigen::Vector3d inertia_diag_min = Eigen::Vector3d::Constant(0.005);
  Eigen::Vector3d inertia_diag_max = Eigen::Vector3d::Constant(1.0);
  double kappa_min = 10.0, kappa_max = 40.0;
  double linear_gain_min = 0.5, linear_gain_max = 1.5;
};

// Box over the flat decision vector plus the subset of coordinates that are
// optimized. Optimizer coordinates are the free entries mapped to [0, 1].
class SearchSpace {
 public:
  SearchSpace() = default;
  SearchSpace(Eigen::VectorXd lower, Eigen::VectorXd upper,
              std::vector<int> free, ParamVector base)
      : lower_(std::move(lower)),
        upper_(std::move(upper)),
        free_(std::move(free)),
        base_(std::move(base)) {
    if (lower_.size() != base_.Size() || upper_.size() != base_.Size())
      throw ConfigurationError("search box does not match parameter layout");
    for (int i : free_) {
      if (i < 0 || i >= base_.Size())
        throw ConfigurationError("free coordinate index out of range");
      if (!(upper_(i) > lower_(i)))
        throw ConfigurationError("empty search interval for " +
                                 base_.CoordinateName(i));
    }
  }

  int Dim() const { return static_cast<int>(free_.size()); }
  const std::vector<int>& free() const { return free_; }
  const Eigen::VectorXd& lower() const { return lower_; }
  const Eigen::VectorXd& upper() const { return upper_; }
  const ParamVector& base() const { return base_; }
  void set_base(const ParamVector& base) { base_ = base; }

  Eigen::VectorXd Width() const {
    Eigen::VectorXd w(Dim());
    for (int k = 0; k < Dim(); ++k) w(k) = upper_(free_[k]) - lower_(free_[k]);
    return w;
  }

  Eigen::VectorXd Normalize(const ParamVector& p) const {
    const Eigen::VectorXd flat = p.Flat();
    Eigen::VectorXd u(Dim());
    for (int k = 0; k < Dim(); ++k) {
      const int i = free_[k];
      u(k) = (flat(i) - lower_(i)) / (upper_(i) - lower_(i));
    }
    return u;
  }

  ParamVector Denormalize(const Eigen::VectorXd& u) const {
    if (u.size() != Dim())
      throw InvalidArgument("normalized vector has wrong dimension");
    Eigen::VectorXd flat = base_.Flat();
    for (int k = 0; k < Dim(); ++k) {
      const int i = free_[k];
      flat(i) = lower_(i) + u(k) * (upper_(i) - lower_(i));
    }
    return ParamVector::FromFlat(flat, base_.motor);
  }

  std::vector<std::string> FreeNames() const {
    std::vector<std::string> names;
    for (int i : free_) names.push_back(base_.CoordinateName(i));
    return names;
  }

 private:
  Eigen::VectorXd lower_, upper_;
  std::vector<int> free_;
  ParamVector base_;
};

// Resolves coordinate selectors into flat indices. Accepts coordinate names
// ("alpha", "t1", "kappa2"), slice names ("phi", "kappa", "kappa_s") and the
// groups "mass" (alpha), "com" (t1..t3) and "inertia" (d*, s*).
inline std::vector<int> ResolveCoordinates(
    const ParamVector& layout_source, const std::vector<std::string>& names) {
  std::vector<int> idx;
  auto add = [&](int i) {
    if (std::find(idx.begin(), idx.end(), i) == idx.end()) idx.push_back(i);
  };
  for (const auto& name : names) {
    bool matched = false;
    for (int i = 0; i < layout_source.Size(); ++i) {
      if (layout_source.CoordinateName(i) == name) {
        add(i);
        matched = true;
      }
    }
    if (name == "phi") {
      for (int i = 0; i < 10; ++i) add(i);
      matched = true;
    } else if (name == layout_source.ActuatorSliceName()) {
      for (int i = 10; i < layout_source.Size(); ++i) add(i);
      matched = true;
    } else if (name == "mass") {
      add(LogCholeskyVector::kAlpha);
      matched = true;
    } else if (name == "com") {
      for (int i = LogCholeskyVector::kT1; i <= LogCholeskyVector::kT3; ++i)
        add(i);
      matched = true;
    } else if (name == "inertia") {
      for (int i = LogCholeskyVector::kD1; i <= LogCholeskyVector::kS13; ++i)
        add(i);
      matched = true;
    } else if (name == "kappa" || name == "kappa_s") {
      // Actuator slice absent under this motor model: nothing to free.
      matched = true;
    }
    if (!matched)
      throw ConfigurationError("unknown parameter coordinate '" + name + "'");
  }
  std::sort(idx.begin(), idx.end());
  return idx;
}

// Maps physical ranges onto the log-Cholesky box:
//   alpha in 0.5 ln [m_min, m_max], t = com range,
//   d_i in 0.5 ln [I_min / m_max, I_max / m_min],
//   s_ij in +-0.5 sqrt(max I_max / m_min).
// The box is widened where needed so that theta0 lies inside it.
inline SearchSpace MakeSearchSpace(const PhysicalBounds& b,
                                   const ParamVector& theta0,
                                   const std::vector<std::string>& free) {
  if (!(b.mass_min > 0.0) || !(b.mass_max > b.mass_min))
    throw ConfigurationError("invalid mass bounds");
  const int n = theta0.Size();
  Eigen::VectorXd lo(n), hi(n);
  lo(LogCholeskyVector::kAlpha) = 0.5 * std::log(b.mass_min);
  hi(LogCholeskyVector::kAlpha) = 0.5 * std::log(b.mass_max);
  for (int a = 0; a < 3; ++a) {
    if (!(b.inertia_diag_min(a) > 0.0) ||
        !(b.inertia_diag_max(a) > b.inertia_diag_min(a)))
      throw ConfigurationError("invalid inertia bounds");
    lo(LogCholeskyVector::kD1 + a) =
        0.5 * std::log(b.inertia_diag_min(a) / b.mass_max);
    hi(LogCholeskyVector::kD1 + a) =
        0.5 * std::log(b.inertia_diag_max(a) / b.mass_min);
    lo(LogCholeskyVector::kT1 + a) = b.com_min(a);
    hi(LogCholeskyVector::kT1 + a) = b.com_max(a);
  }
  const double s_half =
      0.5 * std::sqrt(b.inertia_diag_max.maxCoeff() / b.mass_min);
  for (int i = LogCholeskyVector::kS12; i <= LogCholeskyVector::kS13; ++i) {
    lo(i) = -s_half;
    hi(i) = s_half;
  }
  for (int i = 10; i < n; ++i) {
    if (theta0.motor == MotorModelKind::kLinearGain) {
      lo(i) = b.linear_gain_min;
      hi(i) = b.linear_gain_max;
    } else {
      lo(i) = b.kappa_min;
      hi(i) = b.kappa_max;
    }
  }
  const Eigen::VectorXd x0 = theta0.Flat();
  for (int i = 0; i < n; ++i) {
    if (!(hi(i) > lo(i))) throw ConfigurationError("empty parameter interval");
    const double margin = 0.05 * (hi(i) - lo(i));
    if (x0(i) < lo(i)) lo(i) = x0(i) - margin;
    if (x0(i) > hi(i)) hi(i) = x0(i) + margin;
  }
  return SearchSpace(lo, hi, ResolveCoordinates(theta0, free), theta0);
}

// Euclidean distance between two parameter vectors in the normalized
// coordinates of the free dimensions.
inline double NormalizedParamError(const SearchSpace& space,
                                   const ParamVector& a, const ParamVector& b) {
  return (space.Normalize(a) - space.Normalize(b)).norm();
}

}  // namespace sampid

#endif  // SAMPID_PARAMS_HPP_
