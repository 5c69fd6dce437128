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

#ifndef SAMPID_ACTUATOR_HPP_
#define SAMPID_ACTUATOR_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "sampid/errors.hpp"

namespace sampid {

struct PdGains {
  Eigen::VectorXd kp;  // N m / rad
  Eigen::VectorXd kd;  // N m s / rad
};

// kappa is indexed by group; group_map[j] is the group of joint j.
struct SaturationGains {
  Eigen::VectorXd kappa;
  std::vector<int> group_map;
};

enum class MotorModelKind { kIdeal, kLinearGain, kUnifiedTanh, kGroupedTanh };

inline std::string_view ToString(MotorModelKind kind) {
  switch (kind) {
    case MotorModelKind::kIdeal:
      return "ideal";
    case MotorModelKind::kLinearGain:
      return "linear_gain";
    case MotorModelKind::kUnifiedTanh:
      return "unified_tanh";
    case MotorModelKind::kGroupedTanh:
      return "grouped_tanh";
  }
  return "unknown";
}

inline MotorModelKind MotorModelFromString(std::string_view name) {
  if (name == "ideal") return MotorModelKind::kIdeal;
  if (name == "linear_gain" || name == "linear-gain")
    return MotorModelKind::kLinearGain;
  if (name == "unified_tanh" || name == "unified-tanh")
    return MotorModelKind::kUnifiedTanh;
  if (name == "grouped_tanh" || name == "grouped-tanh")
    return MotorModelKind::kGroupedTanh;
  throw ConfigurationError("unknown motor model '" + std::string(name) + "'");
}

// Number of actuator parameters a motor model contributes to the decision
// vector, given the number of joint groups.
inline int ActuatorParamCount(MotorModelKind kind, int n_groups) {
  switch (kind) {
    case MotorModelKind::kIdeal:
      return 0;
    case MotorModelKind::kLinearGain:
    case MotorModelKind::kUnifiedTanh:
      return 1;
    case MotorModelKind::kGroupedTanh:
      return n_groups;
  }
  return 0;
}

inline Eigen::VectorXd PdTorque(const Eigen::VectorXd& q_target,
                                const Eigen::VectorXd& q,
                                const Eigen::VectorXd& dq,
                                const PdGains& gains) {
  const auto n = q.size();
  if (q_target.size() != n || dq.size() != n || gains.kp.size() != n ||
      gains.kd.size() != n) {
    throw InvalidArgument("PdTorque: dimension mismatch");
  }
  return gains.kp.cwiseProduct(q_target - q) - gains.kd.cwiseProduct(dq);
}

// Maps PD torques to applied motor torques. For kLinearGain and
// kUnifiedTanh only kappa(0) is used.
inline Eigen::VectorXd ApplyMotorModel(const Eigen::VectorXd& tau_pd,
                                       MotorModelKind kind,
                                       const SaturationGains& sat) {
  Eigen::VectorXd out(tau_pd.size());
  switch (kind) {
    case MotorModelKind::kIdeal:
      return tau_pd;
    case MotorModelKind::kLinearGain: {
      if (sat.kappa.size() < 1)
        throw ConfigurationError("linear_gain requires one gain");
      return sat.kappa(0) * tau_pd;
    }
    case MotorModelKind::kUnifiedTanh: {
      if (sat.kappa.size() < 1)
        throw ConfigurationError("unified_tanh requires one gain");
      const double k = sat.kappa(0);
      for (Eigen::Index j = 0; j < tau_pd.size(); ++j)
        out(j) = k * std::tanh(tau_pd(j) / k);
      return out;
    }
    case MotorModelKind::kGroupedTanh: {
      if (static_cast<Eigen::Index>(sat.group_map.size()) != tau_pd.size()) {
        throw ConfigurationError("grouped_tanh: missing group assignment");
      }
      for (Eigen::Index j = 0; j < tau_pd.size(); ++j) {
        const int g = sat.group_map[static_cast<std::size_t>(j)];
        if (g < 0 || g >= sat.kappa.size()) {
          throw ConfigurationError("grouped_tanh: joint " + std::to_string(j) +
                                   " has no valid group");
        }
        const double k = sat.kappa(g);
        out(j) = k * std::tanh(tau_pd(j) / k);
      }
      return out;
    }
  }
  return tau_pd;
}

// Single-joint form used inside the physics loop. `kappa` is the gain that
// applies to this joint (ignored for kIdeal).
inline double MotorTorque(double tau_pd, MotorModelKind kind, double kappa) {
  switch (kind) {
    case MotorModelKind::kIdeal:
      return tau_pd;
    case MotorModelKind::kLinearGain:
      return kappa * tau_pd;
    case MotorModelKind::kUnifiedTanh:
    case MotorModelKind::kGroupedTanh:
      return kappa * std::tanh(tau_pd / kappa);
  }
  return tau_pd;
}

inline Eigen::VectorXd ClipTorque(const Eigen::VectorXd& tau, double limit) {
  return tau.cwiseMax(-limit).cwiseMin(limit);
}

}  // namespace sampid

#endif  // SAMPID_ACTUATOR_HPP_
