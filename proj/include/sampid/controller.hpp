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

// Command-conditioned controllers pi(u | x, c).
//
// The 14-channel command follows the usual multi-gait locomotion layout:
//   v_x, v_y, w_z, h, f, b1, b2, b3, b4, h_f, roll, pitch, s_w, s_l.
// GaitController drives the planar quadruped with a phase oscillator and
// cycloidal swing feet. Its front leg stands for the front-left foot and its
// rear leg for the rear-right foot of a four-legged gait table, so
//   phase(front) = f t + b1 + b2,   phase(rear) = f t + b1
// and (b1, b2) = (0, 0) is in phase while (0.5, 0.5) is anti-phase.
// JointTargetController maps selected command channels straight to joint
// targets (pendulum and scalar debug models).

#ifndef SAMPID_CONTROLLER_HPP_
#define SAMPID_CONTROLLER_HPP_

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "sampid/dynamics.hpp"
#include "sampid/errors.hpp"
#include "sampid/state.hpp"

namespace sampid {

struct CommandVector {
  enum Channel {
    kVx = 0,
    kVy,
    kWz,
    kHeight,
    kFrequency,
    kB1,
    kB2,
    kB3,
    kB4,
    kFootHeight,
    kRoll,
    kPitch,
    kStanceWidth,
    kStanceLength,
    kCount
  };
  static constexpr std::array<const char*, kCount> kNames = {
      "v_x", "v_y",  "w_z",   "h",   "f",   "b1",  "b2",
      "b3",  "b4",   "h_f",   "roll", "pitch", "s_w", "s_l"};

  Eigen::Matrix<double, kCount, 1> c;

  CommandVector() {
    c << 0.0, 0.0, 0.0, 0.27, 2.5, 0.5, 0.5, 0.0, 0.65, 0.06, 0.0, 0.0, 0.25,
        0.4;
  }

  double operator[](int i) const { return c(i); }
  double& operator[](int i) { return c(i); }

  static int ChannelIndex(std::string_view name) {
    for (int i = 0; i < kCount; ++i)
      if (name == kNames[static_cast<std::size_t>(i)]) return i;
    throw ConfigurationError("unknown command channel '" + std::string(name) +
                             "'");
  }

  void Validate() const {
    if (!c.allFinite()) throw InvalidArgument("non-finite command");
    if (!(c(kFrequency) > 0.0))
      throw InvalidArgument("gait frequency must be positive");
    if (!(c(kHeight) > 0.0) || !(c(kFootHeight) > 0.0))
      throw InvalidArgument("body and foot heights must be positive");
    for (int i = kB1; i <= kB4; ++i)
      if (c(i) < 0.0 || c(i) > 1.0)
        throw InvalidArgument("phase offsets must lie in [0, 1]");
  }
};

// Counts targets that had to be clamped (reach or joint limits).
struct ControlStats {
  long ticks = 0;
  long saturated = 0;
};

class Controller {
 public:
  virtual ~Controller() = default;
  virtual ControlInput Act(const SimState& state, const CommandVector& c,
                           ControlStats* stats = nullptr) const = 0;
};

struct GaitControllerConfig {
  double duty_min = 0.3;  // b4 is read as the duty factor, kept in
  double duty_max = 0.8;  // [duty_min, duty_max]
  // Nominal body used by the stance force distribution (the controller does
  // not see the true parameters).
  double body_mass = 8.0;      // kg
  double body_inertia = 0.15;  // kg m^2, pitch axis
  double height_gain = 100.0;  // 1/s^2
  double height_damping = 14.0;  // 1/s
  double pitch_gain = 400.0;
  double pitch_damping = 30.0;
  double velocity_gain = 25.0;     // 1/s
  double placement_gain = 0.05;    // s, touch-down shift per m/s of error
  double friction_margin = 0.75;   // |Fx| <= margin * Fz for stance feet
  double moment_weight = 3.0;      // pitch row weight in the force split
  double stance_ramp = 0.06;       // cycle fraction for stance blending
  double max_step = 0.18;          // m, swing foot offset limit
};

// Stance legs are force-controlled through their position targets: the PD
// target is offset from the measured joint angle by tau_des / kp, where
// tau_des = -J^T f realizes the ground reaction f chosen to produce the
// desired body wrench. Swing legs track a foot trajectory by inverse
// kinematics.
class GaitController : public Controller {
 public:
  GaitController(ModelDescriptor model, GaitControllerConfig cfg = {})
      : model_(std::move(model)), cfg_(cfg) {
    if (model_.kind != ModelKind::kPlanarQuadruped)
      throw ConfigurationError("gait controller needs a legged model");
    if (!(cfg_.duty_min > 0.0) || !(cfg_.duty_max < 1.0) ||
        cfg_.duty_min > cfg_.duty_max)
      throw ConfigurationError("duty factor range must lie inside (0, 1)");
    if (!(cfg_.body_mass > 0.0) || !(cfg_.body_inertia > 0.0))
      throw ConfigurationError("nominal body mass/inertia must be positive");
    if ((model_.pd.kp.array() <= 0.0).any())
      throw ConfigurationError("gait controller needs positive kp");
  }

  const GaitControllerConfig& config() const { return cfg_; }

  static double LegPhase(double t, const CommandVector& c, int leg) {
    const double offset = leg == 0 ? c[CommandVector::kB1] + c[CommandVector::kB2]
                                   : c[CommandVector::kB1];
    const double x = c[CommandVector::kFrequency] * t + offset;
    return x - std::floor(x);
  }

  double Duty(const CommandVector& c) const {
    return std::clamp(c[CommandVector::kB4], cfg_.duty_min, cfg_.duty_max);
  }

  // Fraction of the cycle during which at least one foot is in stance.
  double SupportFraction(const CommandVector& c) const {
    const double d = Duty(c);
    const double lag = c[CommandVector::kB2] - std::floor(c[CommandVector::kB2]);
    return std::min(1.0, d + std::min(lag, 1.0 - lag));
  }

  // Swing foot relative to the hip (world axes) at swing progress s. The x
  // path is a cubic Hermite whose end slopes match the stance motion.
  Eigen::Vector2d SwingOffset(double s, double duty, const CommandVector& c,
                              double touchdown_shift) const {
    const double f = c[CommandVector::kFrequency];
    const double stride = c[CommandVector::kVx] * duty / f;
    const double x0 = -0.5 * stride;
    const double x1 = 0.5 * stride + touchdown_shift;
    const double m = -stride * (1.0 - duty) / duty;
    const double s2 = s * s, s3 = s2 * s;
    double x = (2 * s3 - 3 * s2 + 1) * x0 + (s3 - 2 * s2 + s) * m +
               (-2 * s3 + 3 * s2) * x1 + (s3 - s2) * m;
    x = std::clamp(x, -cfg_.max_step, cfg_.max_step);
    const double z = -c[CommandVector::kHeight] +
                     c[CommandVector::kFootHeight] * 0.5 *
                         (1.0 - std::cos(2.0 * M_PI * s));
    return {x, z};
  }

  ControlInput Act(const SimState& s, const CommandVector& c,
                   ControlStats* stats = nullptr) const override {
    c.Validate();
    const double g = model_.gravity;
    const double pitch = QuatPitch(s.quat);
    const double pitch_cmd = c[CommandVector::kPitch];
    const double v_cmd = c[CommandVector::kVx];
    const double duty = Duty(c);
    const double cp = std::cos(pitch), sp = std::sin(pitch);

    std::array<bool, 2> stance{};
    std::array<double, 2> phase{};
    for (int leg = 0; leg < 2; ++leg) {
      phase[leg] = LegPhase(s.t, c, leg);
      stance[leg] = phase[leg] < duty;
    }

    // desired wrench on the body about the base origin
    const double m = cfg_.body_mass;
    const double fx = m * cfg_.velocity_gain * (v_cmd - s.v(0));
    const double fz =
        m * g / SupportFraction(c) +
        m * (cfg_.height_gain * (c[CommandVector::kHeight] - s.p(2)) -
             cfg_.height_damping * s.v(2));
    const double my =
        cfg_.body_inertia * (cfg_.pitch_gain * (pitch_cmd - pitch) -
                             cfg_.pitch_damping * s.omega(1));
    const std::vector<Eigen::Vector3d> feet = FootPositions(s, model_);
    const std::array<Eigen::Vector2d, 2> forces =
        DistributeWrench(Eigen::Vector3d(fx, fz, my), feet, s, stance);

    ControlInput u;
    u.q_target.resize(model_.n_joints);
    bool clamped = false;
    const double shift =
        cfg_.placement_gain * (s.v(0) - v_cmd) + 0.5 * s.v(0) * duty /
                                                     c[CommandVector::kFrequency] -
        0.5 * v_cmd * duty / c[CommandVector::kFrequency];
    const double stride = v_cmd * duty / c[CommandVector::kFrequency];
    const double ramp = std::min(cfg_.stance_ramp, duty / 3.0);
    for (int leg = 0; leg < 2; ++leg) {
      const int ja = 2 * leg, jk = 2 * leg + 1;
      const double hip_x = model_.hip_x[static_cast<std::size_t>(leg)];
      // joint angles that put the foot at `off` from the hip (world axes),
      // with the hip placed where the commanded posture puts it
      auto position_target = [&](const Eigen::Vector2d& off) {
        const double wx = std::cos(pitch_cmd) * hip_x + off(0);
        const double wz = off(1);
        const double bx = cp * wx - sp * wz;
        const double bz = sp * wx + cp * wz;
        Eigen::Vector2d q;
        if (!PlanarLegIk(model_, bx - hip_x, bz, q(0), q(1))) clamped = true;
        return q;
      };
      Eigen::Vector2d target;
      if (stance[leg]) {
        const double qa = s.q_jnt(ja), qk = s.q_jnt(jk);
        const auto kin = detail::PlanarLeg(model_, leg, pitch, qa, qk);
        // ground reaction in base axes
        const double fbx = cp * forces[leg](0) - sp * forces[leg](1);
        const double fbz = sp * forces[leg](0) + cp * forces[leg](1);
        const double ta = -(kin.jxa * fbx + kin.jza * fbz);
        const double tk = -(kin.jxk * fbx + kin.jzk * fbz);
        // blend in from the kinematic stance path at touch-down and back
        // out before lift-off, so targets stay continuous across phases
        const double st = phase[leg] / duty;
        const Eigen::Vector2d kin_target = position_target(
            {(0.5 - st) * stride, -c[CommandVector::kHeight]});
        const Eigen::Vector2d force_target(qa + ta / model_.pd.kp(ja),
                                           qk + tk / model_.pd.kp(jk));
        const double w = std::clamp(
            std::min(phase[leg], duty - phase[leg]) / ramp, 0.0, 1.0);
        target = w * force_target + (1.0 - w) * kin_target;
      } else {
        const double sw = (phase[leg] - duty) / (1.0 - duty);
        target = position_target(SwingOffset(sw, duty, c, shift));
      }
      u.q_target(ja) = target(0);
      u.q_target(jk) = target(1);
    }
    const Eigen::VectorXd lim =
        u.q_target.cwiseMax(model_.joint_lower).cwiseMin(model_.joint_upper);
    if ((lim - u.q_target).cwiseAbs().maxCoeff() > 0.0) clamped = true;
    u.q_target = lim;
    if (stats) {
      ++stats->ticks;
      if (clamped) ++stats->saturated;
    }
    return u;
  }

 private:
  // Least-squares ground reactions (world axes) for the stance feet that
  // best produce the wrench (Fx, Fz, My about the base origin), then pushed
  // into the friction cone.
  std::array<Eigen::Vector2d, 2> DistributeWrench(
      const Eigen::Vector3d& wrench, const std::vector<Eigen::Vector3d>& feet,
      const SimState& s, const std::array<bool, 2>& stance) const {
    std::array<Eigen::Vector2d, 2> out{Eigen::Vector2d::Zero(),
                                       Eigen::Vector2d::Zero()};
    std::vector<int> legs;
    for (int leg = 0; leg < 2; ++leg)
      if (stance[leg]) legs.push_back(leg);
    if (legs.empty()) return out;
    const int n = static_cast<int>(legs.size());
    Eigen::MatrixXd a(3, 2 * n);
    for (int k = 0; k < n; ++k) {
      const Eigen::Vector3d r = feet[static_cast<std::size_t>(legs[k])] - s.p;
      a.col(2 * k) << 1.0, 0.0, r(2);
      a.col(2 * k + 1) << 0.0, 1.0, -r(0);
    }
    const Eigen::Vector3d w(1.0, 1.0, cfg_.moment_weight);
    const Eigen::MatrixXd aw = w.asDiagonal() * a;
    const Eigen::MatrixXd reg =
        1e-3 * Eigen::MatrixXd::Identity(2 * n, 2 * n);
    const Eigen::VectorXd f = (aw.transpose() * aw + reg)
                                  .ldlt()
                                  .solve(aw.transpose() * w.asDiagonal() *
                                         wrench);
    for (int k = 0; k < n; ++k) {
      double fx = f(2 * k), fz = std::max(0.0, f(2 * k + 1));
      const double cap = cfg_.friction_margin * fz;
      fx = std::clamp(fx, -cap, cap);
      out[static_cast<std::size_t>(legs[k])] = Eigen::Vector2d(fx, fz);
    }
    return out;
  }

  ModelDescriptor model_;
  GaitControllerConfig cfg_;
};

// q_target(j) = c[channels[j]], clamped to the joint limits.
class JointTargetController : public Controller {
 public:
  JointTargetController(ModelDescriptor model, std::vector<int> channels)
      : model_(std::move(model)), channels_(std::move(channels)) {
    if (static_cast<int>(channels_.size()) != model_.n_joints)
      throw ConfigurationError("one command channel per joint is required");
    for (int ch : channels_)
      if (ch < 0 || ch >= CommandVector::kCount)
        throw ConfigurationError("command channel out of range");
  }

  ControlInput Act(const SimState&, const CommandVector& c,
                   ControlStats* stats = nullptr) const override {
    ControlInput u;
    u.q_target.resize(model_.n_joints);
    bool clamped = false;
    for (int j = 0; j < model_.n_joints; ++j) {
      const double raw = c[channels_[static_cast<std::size_t>(j)]];
      const double v = std::clamp(raw, model_.joint_lower(j),
                                  model_.joint_upper(j));
      if (v != raw) clamped = true;
      u.q_target(j) = v;
    }
    if (stats) {
      ++stats->ticks;
      if (clamped) ++stats->saturated;
    }
    return u;
  }

 private:
  ModelDescriptor model_;
  std::vector<int> channels_;
};

// Default controller for each built-in model. The pendulum reads its two
// joint targets from the v_x and pitch channels; the scalar model reads v_x.
inline std::shared_ptr<const Controller> MakeController(
    const ModelDescriptor& model, const GaitControllerConfig& cfg = {}) {
  switch (model.kind) {
    case ModelKind::kPlanarQuadruped:
      return std::make_shared<GaitController>(model, cfg);
    case ModelKind::kDoublePendulum:
      return std::make_shared<JointTargetController>(
          model, std::vector<int>{CommandVector::kVx, CommandVector::kPitch});
    case ModelKind::kLinearDebug:
      return std::make_shared<JointTargetController>(
          model, std::vector<int>{CommandVector::kVx});
    case ModelKind::kCustom:
      break;
  }
  throw ConfigurationError("no default controller for model '" + model.name +
                           "'");
}

}  // namespace sampid

#endif  // SAMPID_CONTROLLER_HPP_
