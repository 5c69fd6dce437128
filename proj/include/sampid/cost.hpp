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

// Multi-step prediction cost. Each clip is replayed open loop from its
// logged initial state; squared errors of the base and joint channels are
// summed over the horizon. Parameter regularization is added once per
// evaluation.
//
// Effective weight of a term = coefficient * group scale * normalizer, with
// group scales for velocity, torque and regularization terms and normalizers
// that NormalizeWeights fills from a reference set.

#ifndef SAMPID_COST_HPP_
#define SAMPID_COST_HPP_

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "json.hpp"
#include "sampid/dataset.hpp"
#include "sampid/dynamics.hpp"
#include "sampid/errors.hpp"
#include "sampid/parallel.hpp"
#include "sampid/params.hpp"

namespace sampid {

enum CostTerm {
  kBasePos = 0,
  kBaseVel,
  kBaseQuat,
  kBaseAngVel,
  kJointPos,
  kJointVel,
  kJointTorque,
  kRegMass,
  kRegCom,
  kRegInertia,
  kRegTanhGain,
  kRegLinearGain,
  kDivergence,
  kTermCount
};

inline constexpr std::array<const char*, kTermCount> kCostTermNames = {
    "base_pos",   "base_vel",  "base_quat",     "base_angvel", "joint_pos",
    "joint_vel",  "joint_torque", "reg_mass",   "reg_com",     "reg_inertia",
    "reg_tanh_gain", "reg_linear_gain", "divergence"};

using TermVector = std::array<double, kTermCount>;

inline bool IsDataTerm(int t) { return t <= kJointTorque; }
inline bool IsRegTerm(int t) { return t >= kRegMass && t <= kRegLinearGain; }

struct CostWeights {
  TermVector coefficient{4.0, 2.0, 2.0, 0.5, 3.0, 0.1, 0.01,
                         0.01, 10.0, 1.0, 0.01, 0.1, 1.0};
  TermVector normalizer = [] {
    TermVector n;
    n.fill(1.0);
    return n;
  }();
  double velocity_scale = 0.5;
  double torque_scale = 0.2;
  double regularization_scale = 0.1;
  double divergence_penalty = 1e6;
  bool average_by_length = false;  // divide each clip's sums by its horizon

  double Scale(int t) const {
    if (t == kBaseVel || t == kBaseAngVel || t == kJointVel)
      return velocity_scale;
    if (t == kJointTorque) return torque_scale;
    if (IsRegTerm(t)) return regularization_scale;
    return 1.0;
  }
  double Effective(int t) const {
    if (t == kDivergence) return 1.0;
    return coefficient[static_cast<std::size_t>(t)] * Scale(t) *
           normalizer[static_cast<std::size_t>(t)];
  }
  void Validate() const {
    for (int t = 0; t < kTermCount; ++t)
      if (!(coefficient[static_cast<std::size_t>(t)] >= 0.0) ||
          !(normalizer[static_cast<std::size_t>(t)] >= 0.0))
        throw ConfigurationError(std::string("cost weight for ") +
                                 kCostTermNames[static_cast<std::size_t>(t)] +
                                 " must be >= 0");
    if (!(velocity_scale >= 0.0) || !(torque_scale >= 0.0) ||
        !(regularization_scale >= 0.0) || !(divergence_penalty >= 0.0))
      throw ConfigurationError("cost scales must be >= 0");
  }
};

struct ClipReport {
  std::size_t index = 0;
  double total = 0.0;
  bool diverged = false;
};

struct CostReport {
  double total = 0.0;
  TermVector terms{};  // weighted
  TermVector raw{};    // unweighted sums
  std::vector<ClipReport> clips;
  std::size_t diverged = 0;

  nlohmann::json ToJson() const {
    nlohmann::json t, r;
    for (int i = 0; i < kTermCount; ++i) {
      t[kCostTermNames[static_cast<std::size_t>(i)]] =
          terms[static_cast<std::size_t>(i)];
      r[kCostTermNames[static_cast<std::size_t>(i)]] =
          raw[static_cast<std::size_t>(i)];
    }
    nlohmann::json c = nlohmann::json::array();
    for (const auto& cr : clips)
      c.push_back({{"index", cr.index}, {"total", cr.total},
                   {"diverged", cr.diverged}});
    return {{"total", total}, {"terms", t}, {"raw", r},
            {"clips", c},     {"diverged", diverged}};
  }
};

// Squared-error sums of one state against a reference.
inline void AccumulateStateError(const SimState& s, const SimState& r,
                                 TermVector& raw) {
  raw[kBasePos] += (s.p - r.p).squaredNorm();
  raw[kBaseVel] += (s.v - r.v).squaredNorm();
  const double dot = s.quat.dot(r.quat);
  raw[kBaseQuat] += 1.0 - dot * dot;
  raw[kBaseAngVel] += (s.omega - r.omega).squaredNorm();
  raw[kJointPos] += (s.q_jnt - r.q_jnt).squaredNorm();
  raw[kJointVel] += (s.dq_jnt - r.dq_jnt).squaredNorm();
}

// Unweighted data-term sums for one clip; returns false on divergence.
inline bool ClipRawTerms(const ParamVector& theta, const ClipSet& set,
                         const Clip& clip, const ModelDescriptor& model,
                         TermVector& raw) {
  raw.fill(0.0);
  const Trajectory& tr = set.TrajectoryOf(clip);
  if (clip.horizon < 1 || clip.start < 0 ||
      static_cast<std::size_t>(clip.start + clip.horizon) >= tr.states.size())
    throw InvalidArgument("clip does not fit its trajectory");
  SimState x = tr.states[static_cast<std::size_t>(clip.start)];
  try {
    for (int k = 0; k < clip.horizon; ++k) {
      const std::size_t i = static_cast<std::size_t>(clip.start + k);
      StepResult r = StepWithTorque(x, tr.inputs[i], theta, model);
      x = std::move(r.state);
      AccumulateStateError(x, tr.states[i + 1], raw);
      raw[kJointTorque] += (r.tau - tr.tau_meas[i]).squaredNorm();
    }
  } catch (const NumericalError&) {
    return false;
  }
  return true;
}

inline TermVector RegularizationTerms(const ParamVector& theta,
                                      const ParamVector& theta0) {
  TermVector raw{};
  const InertialParams a = theta.Inertial(), b = theta0.Inertial();
  raw[kRegMass] = (a.mass - b.mass) * (a.mass - b.mass);
  raw[kRegCom] = (a.com - b.com).squaredNorm();
  raw[kRegInertia] = (a.inertia - b.inertia).squaredNorm();
  if (theta.actuator.size() == theta0.actuator.size() &&
      theta.actuator.size() > 0) {
    const double d = (theta.actuator - theta0.actuator).squaredNorm();
    if (theta.motor == MotorModelKind::kLinearGain)
      raw[kRegLinearGain] = d;
    else
      raw[kRegTanhGain] = d;
  }
  return raw;
}

inline CostReport ClipCost(const ParamVector& theta, const ClipSet& set,
                           std::size_t index, const CostWeights& w,
                           const ModelDescriptor& model) {
  CostReport rep;
  const Clip& clip = set.clips.at(index);
  TermVector raw;
  const bool ok = ClipRawTerms(theta, set, clip, model, raw);
  if (!ok) {
    rep.terms[kDivergence] = w.divergence_penalty;
    rep.raw[kDivergence] = 1.0;
    rep.diverged = 1;
  } else {
    const double len = w.average_by_length ? clip.horizon : 1.0;
    for (int t = 0; t <= kJointTorque; ++t) {
      rep.raw[static_cast<std::size_t>(t)] = raw[static_cast<std::size_t>(t)];
      rep.terms[static_cast<std::size_t>(t)] =
          w.Effective(t) * raw[static_cast<std::size_t>(t)] / len;
    }
  }
  for (double v : rep.terms) rep.total += v;
  rep.clips.push_back({index, rep.total, !ok});
  return rep;
}

// Sum of all clip costs plus one regularization term. Clips are evaluated
// concurrently and reduced in index order.
inline CostReport TotalCost(const ParamVector& theta, const ClipSet& set,
                            const CostWeights& w, const ParamVector& theta0,
                            const ModelDescriptor& model, int threads = 1) {
  if (set.empty()) throw InvalidArgument("cost needs at least one clip");
  std::vector<CostReport> per(set.size());
  ParallelFor(
      set.size(), [&](std::size_t i) { per[i] = ClipCost(theta, set, i, w, model); },
      threads);
  CostReport rep;
  for (const auto& c : per) {
    for (int t = 0; t < kTermCount; ++t) {
      rep.terms[static_cast<std::size_t>(t)] +=
          c.terms[static_cast<std::size_t>(t)];
      rep.raw[static_cast<std::size_t>(t)] += c.raw[static_cast<std::size_t>(t)];
    }
    rep.diverged += c.diverged;
    rep.clips.push_back(c.clips.front());
  }
  if (rep.diverged == set.size())
    throw EvaluationFailed("all " + std::to_string(set.size()) +
                           " clips diverged");
  const TermVector reg = RegularizationTerms(theta, theta0);
  for (int t = kRegMass; t <= kRegLinearGain; ++t) {
    rep.raw[static_cast<std::size_t>(t)] = reg[static_cast<std::size_t>(t)];
    rep.terms[static_cast<std::size_t>(t)] =
        w.Effective(t) * reg[static_cast<std::size_t>(t)];
  }
  rep.total = 0.0;
  for (double v : rep.terms) rep.total += v;
  return rep;
}

// Divides each data term by its unweighted sum on the reference set at
// theta0 so that it contributes coefficient * scale there. Terms with a sum
// below 1e-12 keep their weight. Normalizers only depend on the reference
// set, so applying this twice gives the same weights.
inline CostWeights NormalizeWeights(const CostWeights& raw,
                                    const ClipSet& reference,
                                    const ParamVector& theta0,
                                    const ModelDescriptor& model,
                                    int threads = 1) {
  if (reference.empty())
    throw InvalidArgument("normalization needs a reference clip set");
  std::vector<TermVector> per(reference.size());
  std::vector<char> ok(reference.size(), 0);
  ParallelFor(
      reference.size(),
      [&](std::size_t i) {
        ok[i] = ClipRawTerms(theta0, reference, reference.clips[i], model,
                             per[i]);
      },
      threads);
  TermVector sum{};
  for (std::size_t i = 0; i < per.size(); ++i) {
    if (!ok[i]) continue;
    const double len =
        raw.average_by_length ? reference.clips[i].horizon : 1.0;
    for (int t = 0; t <= kJointTorque; ++t)
      sum[static_cast<std::size_t>(t)] += per[i][static_cast<std::size_t>(t)] / len;
  }
  CostWeights out = raw;
  for (int t = 0; t <= kJointTorque; ++t) {
    const double s = sum[static_cast<std::size_t>(t)];
    out.normalizer[static_cast<std::size_t>(t)] = s < 1e-12 ? 1.0 : 1.0 / s;
  }
  return out;
}

inline nlohmann::json WeightsToJson(const CostWeights& w) {
  nlohmann::json c, n;
  for (int t = 0; t < kTermCount; ++t) {
    c[kCostTermNames[static_cast<std::size_t>(t)]] =
        w.coefficient[static_cast<std::size_t>(t)];
    n[kCostTermNames[static_cast<std::size_t>(t)]] =
        w.normalizer[static_cast<std::size_t>(t)];
  }
  return {{"coefficient", c},
          {"normalizer", n},
          {"velocity_scale", w.velocity_scale},
          {"torque_scale", w.torque_scale},
          {"regularization_scale", w.regularization_scale},
          {"divergence_penalty", w.divergence_penalty},
          {"average_by_length", w.average_by_length}};
}

inline CostWeights WeightsFromJson(const nlohmann::json& j) {
  CostWeights w;
  auto read = [&](const char* key, TermVector& v) {
    if (!j.contains(key)) return;
    for (const auto& [name, value] : j.at(key).items()) {
      int idx = -1;
      for (int t = 0; t < kTermCount; ++t)
        if (name == kCostTermNames[static_cast<std::size_t>(t)]) idx = t;
      if (idx < 0) throw ConfigurationError("unknown cost term '" + name + "'");
      v[static_cast<std::size_t>(idx)] = value.get<double>();
    }
  };
  read("coefficient", w.coefficient);
  read("normalizer", w.normalizer);
  w.velocity_scale = j.value("velocity_scale", w.velocity_scale);
  w.torque_scale = j.value("torque_scale", w.torque_scale);
  w.regularization_scale =
      j.value("regularization_scale", w.regularization_scale);
  w.divergence_penalty = j.value("divergence_penalty", w.divergence_penalty);
  w.average_by_length = j.value("average_by_length", w.average_by_length);
  w.Validate();
  return w;
}

}  // namespace sampid

#endif  // SAMPID_COST_HPP_
