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

// Parameterized forward dynamics x+ = f(x, u; theta).
//
// Built-in models:
//   * double_pendulum  - fixed base, two revolute joints about +y, the
//                        identified body is link 2.
//   * planar_quadruped - floating base restricted to x, z and pitch; two
//                        legs (front, rear) with hip and knee joints,
//                        massless links, joint rotor inertia, point feet and
//                        penalty contact with a friction clamp.
//   * linear_debug     - scalar x+ = theta x + u; theta is the single
//                        actuator-slice entry. Used to check sensitivities.
// Other simulators plug in through the Dynamics interface (kind kCustom).
//
// One step advances dt_control using dt_physics sub-steps of a
// kick-drift-kick (velocity Verlet) scheme, which is exact for constant
// acceleration and symplectic for conservative forces. The joint torque path
// is PdTorque -> motor model -> hard clip at torque_limit, evaluated at every
// sub-step.

#ifndef SAMPID_DYNAMICS_HPP_
#define SAMPID_DYNAMICS_HPP_

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "sampid/actuator.hpp"
#include "sampid/errors.hpp"
#include "sampid/params.hpp"
#include "sampid/state.hpp"

namespace sampid {

struct ModelDescriptor;

struct StepResult {
  SimState state;
  Eigen::VectorXd tau;  // mean applied joint torque over the control period
};

class Dynamics {
 public:
  virtual ~Dynamics() = default;
  virtual StepResult Step(const SimState& state, const ControlInput& u,
                          const ParamVector& theta,
                          const ModelDescriptor& model) const = 0;
};

enum class ModelKind { kDoublePendulum, kPlanarQuadruped, kLinearDebug, kCustom };

struct ContactParams {
  double stiffness = 2e4;            // N/m
  double damping = 200.0;            // N s/m
  double friction = 0.8;             // mu
  double tangential_damping = 300.0;  // N s/m, viscous friction below the cone
};

struct ModelDescriptor {
  std::string name;
  ModelKind kind = ModelKind::kPlanarQuadruped;
  int n_joints = 0;
  std::vector<int> joint_groups;  // joint -> actuator group
  std::vector<std::string> group_names;
  double dt_physics = 1e-3;
  double dt_control = 0.02;
  double torque_limit = 45.0;   // per motor
  int motors_per_joint = 1;     // > 1 when one joint lumps several legs
  double gravity = 9.81;
  ContactParams contact;
  PdGains pd;
  Eigen::VectorXd joint_lower, joint_upper;
  double armature = 0.05;  // kg m^2, rotor inertia reflected at each joint
  int kick_corrections = 0;  // extra evaluations of the closing half kick

  // planar_quadruped geometry
  double thigh_length = 0.213;
  double calf_length = 0.213;
  std::vector<double> hip_x;  // per leg, base frame
  double nominal_height = 0.30;
  double fall_height = 0.10;  // base height below this counts as a fall
  double fall_pitch = 1.0;    // |pitch| above this counts as a fall

  // double_pendulum link 1 (known)
  double link1_mass = 1.0;
  double link1_length = 0.5;
  double link1_com = 0.25;
  double link1_inertia = 1.0 * 0.5 * 0.5 / 12.0;  // about its CoM

  std::shared_ptr<const Dynamics> custom;

  int n_groups() const { return static_cast<int>(group_names.size()); }
  int n_legs() const { return static_cast<int>(hip_x.size()); }
  bool floating_base() const { return kind == ModelKind::kPlanarQuadruped; }

  int Substeps() const {
    return static_cast<int>(std::lround(dt_control / dt_physics));
  }

  void Validate() const {
    if (n_joints < 1) throw ConfigurationError("model has no joints");
    if (!(dt_physics > 0.0) || !(dt_control > 0.0))
      throw ConfigurationError("time steps must be positive");
    const double ratio = dt_control / dt_physics;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 || ratio < 1.0)
      throw ConfigurationError(
          "dt_control must be an integer multiple of dt_physics");
    if (static_cast<int>(joint_groups.size()) != n_joints)
      throw ConfigurationError("every joint needs a group assignment");
    for (int g : joint_groups)
      if (g < 0 || g >= n_groups())
        throw ConfigurationError("joint group index out of range");
    if (motors_per_joint < 1)
      throw ConfigurationError("motors_per_joint must be at least 1");
    if (contact.stiffness < 0.0 || contact.damping < 0.0 ||
        contact.tangential_damping < 0.0 || contact.friction < 0.0)
      throw ConfigurationError("contact coefficients must be non-negative");
    if (pd.kp.size() != n_joints || pd.kd.size() != n_joints)
      throw ConfigurationError("PD gains do not match joint count");
    if ((pd.kp.array() < 0.0).any() || (pd.kd.array() < 0.0).any())
      throw ConfigurationError("PD gains must be non-negative");
    if (kind == ModelKind::kPlanarQuadruped && n_joints != 2 * n_legs())
      throw ConfigurationError("planar quadruped needs two joints per leg");
    if (kind == ModelKind::kCustom && !custom)
      throw ConfigurationError("custom model without dynamics");
  }
};

namespace detail {

// Per-joint actuator gain resolved from theta.
inline Eigen::VectorXd JointGains(const ParamVector& theta,
                                  const ModelDescriptor& model) {
  Eigen::VectorXd k = Eigen::VectorXd::Ones(model.n_joints);
  switch (theta.motor) {
    case MotorModelKind::kIdeal:
      break;
    case MotorModelKind::kLinearGain:
    case MotorModelKind::kUnifiedTanh:
      if (theta.actuator.size() < 1)
        throw ConfigurationError("motor model needs one actuator gain");
      k.setConstant(theta.actuator(0));
      break;
    case MotorModelKind::kGroupedTanh:
      for (int j = 0; j < model.n_joints; ++j) {
        const int g = model.joint_groups[static_cast<std::size_t>(j)];
        if (g >= theta.actuator.size())
          throw ConfigurationError("grouped_tanh: missing group gain");
        k(j) = theta.actuator(g);
      }
      break;
  }
  return k;
}

// A joint driven by n identical motors sharing the PD command equally
// delivers n * clip(f(tau_pd / n)).
inline double JointTorque(double q_target, double q, double dq, int j,
                          const ModelDescriptor& model, MotorModelKind motor,
                          const Eigen::VectorXd& gains) {
  const double tau_pd = model.pd.kp(j) * (q_target - q) - model.pd.kd(j) * dq;
  const double n = model.motors_per_joint;
  const double tau = MotorTorque(tau_pd / n, motor, gains(j));
  return n * std::clamp(tau, -model.torque_limit, model.torque_limit);
}

// Kick-drift-kick integration over one control period. accel(q, v, a, tau)
// fills generalized accelerations and joint torques.
template <int N, int NJ, class AccelFn>
void IntegratePeriod(std::array<double, N>& q, std::array<double, N>& v,
                     int substeps, double h, AccelFn&& accel,
                     std::array<double, NJ>& tau_mean, int corrections = 0) {
  std::array<double, N> a{};
  std::array<double, NJ> tau{};
  tau_mean.fill(0.0);
  accel(q, v, a, tau);
  for (int s = 0; s < substeps; ++s) {
    std::array<double, N> v_half;
    for (int i = 0; i < N; ++i) v_half[i] = v[i] + 0.5 * h * a[i];
    for (int i = 0; i < N; ++i) q[i] += h * v_half[i];
    accel(q, v_half, a, tau);
    for (int i = 0; i < N; ++i) v[i] = v_half[i] + 0.5 * h * a[i];
    // Velocity-dependent forces: re-evaluate the closing kick at the new
    // velocity (fixed-point iterations of the implicit half step).
    for (int it = 0; it < corrections; ++it) {
      accel(q, v, a, tau);
      for (int i = 0; i < N; ++i) v[i] = v_half[i] + 0.5 * h * a[i];
    }
    for (int j = 0; j < NJ; ++j) tau_mean[j] += tau[j];
  }
  for (int j = 0; j < NJ; ++j) tau_mean[j] /= substeps;
}

inline void CheckFinite(const SimState& s, long step = -1) {
  const std::string bad = s.FirstNonFinite();
  if (!bad.empty()) throw DivergenceError(bad, s.t, step);
  constexpr double kBlowUp = 1e8;
  if (s.v.cwiseAbs().maxCoeff() > kBlowUp ||
      s.omega.cwiseAbs().maxCoeff() > kBlowUp ||
      (s.dq_jnt.size() > 0 && s.dq_jnt.cwiseAbs().maxCoeff() > kBlowUp))
    throw DivergenceError("velocity magnitude", s.t, step);
}

// ---------------------------------------------------------------------------
// Double pendulum. Joint 1 at the origin; link 1 hangs along -z at q = 0 and
// carries known point-like parameters; link 2 is described about joint 2 by
// (m2, h = m2 r, I_yy) taken from theta.

struct PendulumTerms {
  double a_const;  // link-1 inertia about joint 1 plus m2 l1^2
  double b;        // link-2 inertia about joint 2
  double hx, hz;   // link-2 first moment in its frame
  double grav1;    // (m1 lc1 + m2 l1) g
  double l1;
  double g;
};

inline PendulumTerms MakePendulumTerms(const InertialParams& body,
                                       const ModelDescriptor& model) {
  PendulumTerms t;
  const double m1 = model.link1_mass, lc1 = model.link1_com;
  t.l1 = model.link1_length;
  t.a_const = m1 * lc1 * lc1 + model.link1_inertia + body.mass * t.l1 * t.l1;
  t.b = body.inertia(1, 1);
  t.hx = body.mass * body.com(0);
  t.hz = body.mass * body.com(2);
  t.g = model.gravity;
  t.grav1 = (m1 * lc1 + body.mass * t.l1) * t.g;
  return t;
}

inline Eigen::Matrix2d PendulumMass(const PendulumTerms& t, double q2) {
  const double gam = -t.l1 * (t.hz * std::cos(q2) - t.hx * std::sin(q2));
  Eigen::Matrix2d m;
  m << t.a_const + 2.0 * gam + t.b, gam + t.b, gam + t.b, t.b;
  return m;
}

inline double PendulumPotential(const PendulumTerms& t, double q1, double q2) {
  const double b = q1 + q2;
  return -t.grav1 * std::cos(q1) +
         t.g * (-std::sin(b) * t.hx + std::cos(b) * t.hz);
}

inline void PendulumBias(const PendulumTerms& t, double q1, double q2,
                         double dq1, double dq2, double& c1, double& c2) {
  const double gp = t.l1 * (t.hz * std::sin(q2) + t.hx * std::cos(q2));
  const double b = q1 + q2;
  const double dv2 = t.g * (-std::cos(b) * t.hx - std::sin(b) * t.hz);
  const double dv1 = t.grav1 * std::sin(q1) + dv2;
  c1 = gp * (2.0 * dq1 * dq2 + dq2 * dq2) + dv1;
  c2 = -gp * dq1 * dq1 + dv2;
}

inline StepResult StepPendulum(const SimState& s, const ControlInput& u,
                               const ParamVector& theta,
                               const ModelDescriptor& model) {
  const PendulumTerms terms = MakePendulumTerms(theta.Inertial(), model);
  const Eigen::VectorXd gains = JointGains(theta, model);
  std::array<double, 2> q{s.q_jnt(0), s.q_jnt(1)};
  std::array<double, 2> v{s.dq_jnt(0), s.dq_jnt(1)};
  std::array<double, 2> tau_mean{};
  auto accel = [&](const std::array<double, 2>& qq,
                   const std::array<double, 2>& vv, std::array<double, 2>& a,
                   std::array<double, 2>& tau) {
    for (int j = 0; j < 2; ++j)
      tau[j] = JointTorque(u.q_target(j), qq[j], vv[j], j, model, theta.motor,
                           gains);
    double c1, c2;
    PendulumBias(terms, qq[0], qq[1], vv[0], vv[1], c1, c2);
    const Eigen::Matrix2d m = PendulumMass(terms, qq[1]);
    const Eigen::Vector2d rhs(tau[0] - c1, tau[1] - c2);
    const Eigen::Vector2d acc = m.ldlt().solve(rhs);
    a[0] = acc(0);
    a[1] = acc(1);
  };
  IntegratePeriod<2, 2>(q, v, model.Substeps(), model.dt_physics, accel,
                        tau_mean, model.kick_corrections);
  StepResult r;
  r.state = s;
  r.state.q_jnt << q[0], q[1];
  r.state.dq_jnt << v[0], v[1];
  r.state.t = s.t + model.dt_control;
  r.tau = Eigen::Vector2d(tau_mean[0], tau_mean[1]);
  return r;
}

// ---------------------------------------------------------------------------
// Planar quadruped. Generalized coordinates (x, z, pitch, q0..q3) with the
// base origin as reference point; joint angles are rotations about +y
// relative to the parent, 0 = leg straight down.

struct PlanarLegKinematics {
  double fx, fz;          // foot position relative to base origin, world
  double jxa, jza;        // d(foot_base)/d(hip)
  double jxk, jzk;        // d(foot_base)/d(knee)
  double bx, bz;          // foot position in base frame
};

inline PlanarLegKinematics PlanarLeg(const ModelDescriptor& model, int leg,
                                     double pitch, double qa, double qk) {
  const double l1 = model.thigh_length, l2 = model.calf_length;
  const double sa = std::sin(qa), ca = std::cos(qa);
  const double sak = std::sin(qa + qk), cak = std::cos(qa + qk);
  PlanarLegKinematics k;
  k.bx = model.hip_x[static_cast<std::size_t>(leg)] - l1 * sa - l2 * sak;
  k.bz = -l1 * ca - l2 * cak;
  k.jxa = -l1 * ca - l2 * cak;
  k.jza = l1 * sa + l2 * sak;
  k.jxk = -l2 * cak;
  k.jzk = l2 * sak;
  const double c = std::cos(pitch), s = std::sin(pitch);
  k.fx = c * k.bx + s * k.bz;
  k.fz = -s * k.bx + c * k.bz;
  return k;
}

struct PlanarContact {
  double fx = 0.0, fz = 0.0;  // world-frame ground reaction on the foot
  double foot_x = 0.0, foot_z = 0.0;
  bool active = false;
};

// Ground reaction for one foot given generalized positions/velocities.
inline PlanarContact PlanarFootContact(const ModelDescriptor& model, int leg,
                                       const double* q, const double* v,
                                       PlanarLegKinematics* kin_out = nullptr) {
  const int ja = 2 * leg, jk = 2 * leg + 1;
  const double pitch = q[2];
  const PlanarLegKinematics k =
      PlanarLeg(model, leg, pitch, q[3 + ja], q[3 + jk]);
  if (kin_out) *kin_out = k;
  PlanarContact c;
  c.foot_x = q[0] + k.fx;
  c.foot_z = q[1] + k.fz;
  if (c.foot_z >= 0.0) return c;
  // foot velocity = v_base + omega x r + R * (J dq)
  const double w = v[2];
  const double dbx = k.jxa * v[3 + ja] + k.jxk * v[3 + jk];
  const double dbz = k.jza * v[3 + ja] + k.jzk * v[3 + jk];
  const double cp = std::cos(pitch), sp = std::sin(pitch);
  const double vfx = v[0] + w * k.fz + (cp * dbx + sp * dbz);
  const double vfz = v[1] - w * k.fx + (-sp * dbx + cp * dbz);
  const ContactParams& cp_ = model.contact;
  double fn = cp_.stiffness * (-c.foot_z) - cp_.damping * vfz;
  if (fn <= 0.0) return c;
  double ft = -cp_.tangential_damping * vfx;
  const double cap = cp_.friction * fn;
  ft = std::clamp(ft, -cap, cap);
  c.fx = ft;
  c.fz = fn;
  c.active = true;
  return c;
}

struct PlanarBody {
  double mass;
  double cx, cz;       // CoM in base frame
  double inertia_com;  // about the CoM, y axis
};

inline PlanarBody MakePlanarBody(const InertialParams& p) {
  PlanarBody b;
  b.mass = p.mass;
  b.cx = p.com(0);
  b.cz = p.com(2);
  b.inertia_com = p.inertia(1, 1) - p.mass * (b.cx * b.cx + b.cz * b.cz);
  return b;
}

inline StepResult StepPlanar(const SimState& s, const ControlInput& u,
                             const ParamVector& theta,
                             const ModelDescriptor& model) {
  constexpr int kN = 7, kJ = 4;
  const PlanarBody body = MakePlanarBody(theta.Inertial());
  const Eigen::VectorXd gains = JointGains(theta, model);
  std::array<double, kN> q{s.p(0), s.p(2), QuatPitch(s.quat)};
  std::array<double, kN> v{s.v(0), s.v(2), s.omega(1)};
  for (int j = 0; j < kJ; ++j) {
    q[3 + j] = s.q_jnt(j);
    v[3 + j] = s.dq_jnt(j);
  }
  const double g = model.gravity;
  const double ia = model.armature;
  auto accel = [&](const std::array<double, kN>& qq,
                   const std::array<double, kN>& vv, std::array<double, kN>& a,
                   std::array<double, kJ>& tau) {
    const double pitch = qq[2], w = vv[2];
    const double cp = std::cos(pitch), sp = std::sin(pitch);
    const double cwx = cp * body.cx + sp * body.cz;   // CoM offset, world
    const double cwz = -sp * body.cx + cp * body.cz;
    double fx = 0.0, fz = 0.0, moment = 0.0;
    for (int j = 0; j < kJ; ++j)
      tau[j] = JointTorque(u.q_target(j), qq[3 + j], vv[3 + j], j, model,
                           theta.motor, gains);
    for (int leg = 0; leg < 2; ++leg) {
      PlanarLegKinematics k;
      const PlanarContact c =
          PlanarFootContact(model, leg, qq.data(), vv.data(), &k);
      const int ja = 2 * leg, jk = 2 * leg + 1;
      double gen_a = 0.0, gen_k = 0.0;
      if (c.active) {
        fx += c.fx;
        fz += c.fz;
        // moment about the CoM: (r - c) x F, y component = rz Fx - rx Fz
        moment += (k.fz - cwz) * c.fx - (k.fx - cwx) * c.fz;
        // force in base frame, mapped through the leg Jacobian
        const double fbx = cp * c.fx - sp * c.fz;
        const double fbz = sp * c.fx + cp * c.fz;
        gen_a = k.jxa * fbx + k.jza * fbz;
        gen_k = k.jxk * fbx + k.jzk * fbz;
      }
      a[3 + ja] = (tau[ja] + gen_a) / ia;
      a[3 + jk] = (tau[jk] + gen_k) / ia;
    }
    const double alpha = moment / body.inertia_com;
    const double acx = fx / body.mass;
    const double acz = fz / body.mass - g;
    // origin acceleration = CoM acceleration - d^2(R c)/dt^2
    a[0] = acx - (alpha * cwz - w * w * cwx);
    a[1] = acz - (-alpha * cwx - w * w * cwz);
    a[2] = alpha;
  };
  std::array<double, kJ> tau_mean{};
  IntegratePeriod<kN, kJ>(q, v, model.Substeps(), model.dt_physics, accel,
                          tau_mean, model.kick_corrections);
  StepResult r;
  r.state = s;
  r.state.p(0) = q[0];
  r.state.p(2) = q[1];
  r.state.quat = PitchQuat(q[2]);
  r.state.quat.normalize();
  r.state.v(0) = v[0];
  r.state.v(2) = v[1];
  r.state.omega(1) = v[2];
  for (int j = 0; j < kJ; ++j) {
    r.state.q_jnt(j) = q[3 + j];
    r.state.dq_jnt(j) = v[3 + j];
  }
  r.state.t = s.t + model.dt_control;
  r.tau.resize(kJ);
  for (int j = 0; j < kJ; ++j) r.tau(j) = tau_mean[j];
  return r;
}

inline StepResult StepLinear(const SimState& s, const ControlInput& u,
                             const ParamVector& theta,
                             const ModelDescriptor& model) {
  if (theta.actuator.size() < 1)
    throw ConfigurationError("linear_debug needs one parameter");
  StepResult r;
  r.state = s;
  r.state.q_jnt(0) = theta.actuator(0) * s.q_jnt(0) + u.q_target(0);
  r.state.t = s.t + model.dt_control;
  r.tau = Eigen::VectorXd::Zero(1);
  return r;
}

}  // namespace detail

inline StepResult StepWithTorque(const SimState& state, const ControlInput& u,
                                 const ParamVector& theta,
                                 const ModelDescriptor& model) {
  if (u.q_target.size() != model.n_joints ||
      state.q_jnt.size() != model.n_joints ||
      state.dq_jnt.size() != model.n_joints)
    throw InvalidArgument("state/control dimension does not match model '" +
                          model.name + "'");
  StepResult r;
  switch (model.kind) {
    case ModelKind::kDoublePendulum:
      r = detail::StepPendulum(state, u, theta, model);
      break;
    case ModelKind::kPlanarQuadruped:
      r = detail::StepPlanar(state, u, theta, model);
      break;
    case ModelKind::kLinearDebug:
      r = detail::StepLinear(state, u, theta, model);
      break;
    case ModelKind::kCustom:
      if (!model.custom) throw ConfigurationError("custom model not set");
      r = model.custom->Step(state, u, theta, model);
      break;
  }
  detail::CheckFinite(r.state);
  return r;
}

inline SimState Step(const SimState& state, const ControlInput& u,
                     const ParamVector& theta, const ModelDescriptor& model) {
  return StepWithTorque(state, u, theta, model).state;
}

struct RolloutResult {
  std::vector<SimState> states;        // H + 1 entries, states[0] = x0
  std::vector<Eigen::VectorXd> tau;    // H entries
};

// Open-loop replay of an input sequence.
inline RolloutResult RolloutWithTorque(const SimState& x0,
                                       const std::vector<ControlInput>& u_seq,
                                       const ParamVector& theta,
                                       const ModelDescriptor& model) {
  if (u_seq.empty()) throw InvalidArgument("rollout needs at least one input");
  RolloutResult out;
  out.states.reserve(u_seq.size() + 1);
  out.tau.reserve(u_seq.size());
  out.states.push_back(x0);
  for (std::size_t k = 0; k < u_seq.size(); ++k) {
    try {
      StepResult r = StepWithTorque(out.states.back(), u_seq[k], theta, model);
      out.states.push_back(std::move(r.state));
      out.tau.push_back(std::move(r.tau));
    } catch (const DivergenceError& e) {
      throw DivergenceError(e.field(), e.time(), static_cast<long>(k));
    }
  }
  return out;
}

inline std::vector<SimState> Rollout(const SimState& x0,
                                     const std::vector<ControlInput>& u_seq,
                                     const ParamVector& theta,
                                     const ModelDescriptor& model) {
  return RolloutWithTorque(x0, u_seq, theta, model).states;
}

// Per-foot ground reaction (world frame) at a state; planar quadruped only.
inline std::vector<Eigen::Vector3d> ContactForces(const SimState& s,
                                                  const ModelDescriptor& model) {
  if (model.kind != ModelKind::kPlanarQuadruped)
    throw InvalidArgument("contact forces are defined for legged models only");
  std::array<double, 7> q{s.p(0), s.p(2), QuatPitch(s.quat)};
  std::array<double, 7> v{s.v(0), s.v(2), s.omega(1)};
  for (int j = 0; j < 4; ++j) {
    q[3 + j] = s.q_jnt(j);
    v[3 + j] = s.dq_jnt(j);
  }
  std::vector<Eigen::Vector3d> out;
  for (int leg = 0; leg < model.n_legs(); ++leg) {
    const detail::PlanarContact c =
        detail::PlanarFootContact(model, leg, q.data(), v.data());
    out.emplace_back(c.fx, 0.0, c.fz);
  }
  return out;
}

// World-frame foot positions; planar quadruped only.
inline std::vector<Eigen::Vector3d> FootPositions(const SimState& s,
                                                  const ModelDescriptor& model) {
  std::vector<Eigen::Vector3d> out;
  const double pitch = QuatPitch(s.quat);
  for (int leg = 0; leg < model.n_legs(); ++leg) {
    const auto k = detail::PlanarLeg(model, leg, pitch, s.q_jnt(2 * leg),
                                     s.q_jnt(2 * leg + 1));
    out.emplace_back(s.p(0) + k.fx, s.p(1), s.p(2) + k.fz);
  }
  return out;
}

// Total mechanical energy of the double pendulum (kinetic + potential).
inline double PendulumEnergy(const SimState& s, const ParamVector& theta,
                             const ModelDescriptor& model) {
  const auto t = detail::MakePendulumTerms(theta.Inertial(), model);
  const Eigen::Matrix2d m = detail::PendulumMass(t, s.q_jnt(1));
  const Eigen::Vector2d dq(s.dq_jnt(0), s.dq_jnt(1));
  return 0.5 * dq.dot(m * dq) +
         detail::PendulumPotential(t, s.q_jnt(0), s.q_jnt(1));
}

// Planar two-link inverse kinematics for a foot target given relative to the
// hip in base coordinates. Returns false when the target was out of reach and
// had to be pulled back onto the workspace boundary.
inline bool PlanarLegIk(const ModelDescriptor& model, double x, double z,
                        double& hip, double& knee) {
  const double l1 = model.thigh_length, l2 = model.calf_length;
  double d = std::hypot(x, z);
  const double d_max = 0.999 * (l1 + l2);
  const double d_min = std::max(1e-3, 1.001 * std::abs(l1 - l2)) + 0.02;
  bool clamped = false;
  if (d > d_max || d < d_min) {
    const double target = std::clamp(d, d_min, d_max);
    if (d < 1e-9) {
      x = 0.0;
      z = -target;
    } else {
      x *= target / d;
      z *= target / d;
    }
    d = target;
    clamped = true;
  }
  const double cos_inner =
      std::clamp((l1 * l1 + l2 * l2 - d * d) / (2.0 * l1 * l2), -1.0, 1.0);
  knee = -(M_PI - std::acos(cos_inner));  // knee bends backward
  // foot(a, k) is foot(0, k) rotated by a, so the hip angle is the
  // difference of the two direction angles (measured from straight down).
  const double phi_target = std::atan2(-x, -z);
  const double phi_chain =
      std::atan2(l2 * std::sin(knee), l1 + l2 * std::cos(knee));
  hip = phi_target - phi_chain;
  return !clamped;
}

// ---------------------------------------------------------------------------
// Built-in model descriptors.

inline ModelDescriptor MakeDoublePendulum() {
  ModelDescriptor m;
  m.name = "double_pendulum";
  m.kind = ModelKind::kDoublePendulum;
  m.n_joints = 2;
  m.joint_groups = {0, 1};
  m.group_names = {"shoulder", "elbow"};
  m.pd.kp = Eigen::Vector2d(20.0, 20.0);
  m.pd.kd = Eigen::Vector2d(0.5, 0.5);
  m.joint_lower = Eigen::Vector2d(-M_PI, -M_PI);
  m.joint_upper = Eigen::Vector2d(M_PI, M_PI);
  m.armature = 0.0;
  m.kick_corrections = 2;
  return m;
}

// Groups: front hip, rear hip, knees. A sagittal slice has no abduction
// joint, so the three actuator groups are split by leg for the hips. Each
// planar leg stands for a left/right pair, hence two motors per joint.
inline ModelDescriptor MakePlanarQuadruped() {
  ModelDescriptor m;
  m.name = "planar_quadruped";
  m.kind = ModelKind::kPlanarQuadruped;
  m.n_joints = 4;
  m.joint_groups = {0, 2, 1, 2};
  m.group_names = {"front_hip", "rear_hip", "knee"};
  m.hip_x = {0.1934, -0.1934};
  m.motors_per_joint = 2;
  m.pd.kp = Eigen::Vector4d::Constant(60.0);
  m.pd.kd = Eigen::Vector4d::Constant(1.5);
  m.joint_lower = Eigen::Vector4d(-1.5, -2.7, -1.5, -2.7);
  m.joint_upper = Eigen::Vector4d(2.5, -0.5, 2.5, -0.5);
  return m;
}

inline ModelDescriptor MakeLinearDebug() {
  ModelDescriptor m;
  m.name = "linear_debug";
  m.kind = ModelKind::kLinearDebug;
  m.n_joints = 1;
  m.joint_groups = {0};
  m.group_names = {"gain"};
  m.dt_physics = 0.02;
  m.dt_control = 0.02;
  m.pd.kp = Eigen::VectorXd::Zero(1);
  m.pd.kd = Eigen::VectorXd::Zero(1);
  m.joint_lower = Eigen::VectorXd::Constant(1, -1e9);
  m.joint_upper = Eigen::VectorXd::Constant(1, 1e9);
  m.armature = 0.0;
  return m;
}

inline ModelDescriptor MakeModel(const std::string& name) {
  if (name == "double_pendulum") return MakeDoublePendulum();
  if (name == "planar_quadruped") return MakePlanarQuadruped();
  if (name == "linear_debug") return MakeLinearDebug();
  throw ConfigurationError("unknown model '" + name + "'");
}

// Zero-velocity state for the model at time 0: hanging pendulum, standing
// quadruped at nominal height with feet under the hips, or x = 1 for the
// scalar model.
inline SimState DefaultInitialState(const ModelDescriptor& model) {
  SimState s;
  s.q_jnt = Eigen::VectorXd::Zero(model.n_joints);
  s.dq_jnt = Eigen::VectorXd::Zero(model.n_joints);
  switch (model.kind) {
    case ModelKind::kPlanarQuadruped: {
      s.p = Eigen::Vector3d(0.0, 0.0, model.nominal_height);
      for (int leg = 0; leg < model.n_legs(); ++leg) {
        double hip = 0.0, knee = 0.0;
        PlanarLegIk(model, 0.0, -model.nominal_height, hip, knee);
        s.q_jnt(2 * leg) = hip;
        s.q_jnt(2 * leg + 1) = knee;
      }
      break;
    }
    case ModelKind::kLinearDebug:
      s.q_jnt(0) = 1.0;
      break;
    default:
      break;
  }
  return s;
}

// Parameter vector whose actuator slice has the size the motor model needs
// for this model descriptor.
inline ParamVector MakeParams(const ModelDescriptor& model,
                              const InertialParams& inertial,
                              MotorModelKind motor,
                              const Eigen::VectorXd& actuator) {
  const int need = ActuatorParamCount(motor, model.n_groups());
  if (actuator.size() != need)
    throw ConfigurationError("motor model '" + std::string(ToString(motor)) +
                             "' needs " + std::to_string(need) +
                             " actuator parameters");
  return ParamVector::FromInertial(inertial, actuator, motor);
}

}  // namespace sampid

#endif  // SAMPID_DYNAMICS_HPP_
