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

// Two-stage identification pipeline:
//   1. identify theta from recorded data D0 by CMA-ES on the prediction cost;
//   2. optimize an exciting command plan under the stage-1 estimate, record
//      D1 with it and identify again on D0 + D1, warm-started at stage 1.
// Data is synthetic: a hidden "true" parameter set plays the robot.

#ifndef SAMPID_PIPELINE_HPP_
#define SAMPID_PIPELINE_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "sampid/bezier.hpp"
#include "sampid/cmaes.hpp"
#include "sampid/controller.hpp"
#include "sampid/cost.hpp"
#include "sampid/dataset.hpp"
#include "sampid/dynamics.hpp"
#include "sampid/errors.hpp"
#include "sampid/excitation.hpp"
#include "sampid/params.hpp"
#include "sampid/svg.hpp"

namespace sampid {

// Body description in the CoM frame (what data sheets list).
struct BodySpec {
  double mass = 1.0;
  Eigen::Vector3d com = Eigen::Vector3d::Zero();
  Eigen::Matrix3d inertia_com = Eigen::Matrix3d::Identity();

  InertialParams Inertial() const {
    return InertialParams::FromComFrame(mass, com, inertia_com);
  }
};

struct PipelineConfig {
  std::string model = "planar_quadruped";
  double kp = -1.0, kd = -1.0;  // < 0: model default

  // nominal and hidden true parameters
  BodySpec theta0_body{6.921, {0.021, 0.0, -0.005},
                       Eigen::Vector3d(0.025, 0.098, 0.107).asDiagonal()};
  Eigen::VectorXd theta0_kappa = Eigen::Vector3d(30.0, 30.0, 30.0);
  double theta0_linear_gain = 1.0;
  BodySpec truth_body{9.363, {0.004, -0.005, -0.020},
                      Eigen::Vector3d(0.391, 0.515, 0.396).asDiagonal()};
  Eigen::VectorXd truth_kappa = Eigen::Vector3d(22.553, 24.969, 23.523);
  MotorModelKind motor = MotorModelKind::kGroupedTanh;        // assumed
  MotorModelKind truth_motor = MotorModelKind::kGroupedTanh;  // data

  PhysicalBounds bounds;
  std::vector<std::string> free{"alpha", "d1", "t1", "t3", "kappa"};

  CostWeights cost;
  double reference_fraction = 0.1;

  CmaesConfig stage1 = [] {
    CmaesConfig c;
    c.population = 32;
    c.iterations = 40;
    c.sigma0 = 0.3;
    return c;
  }();
  CmaesConfig stage2 = [] {
    CmaesConfig c;
    c.population = 32;
    c.iterations = 40;
    c.sigma0 = 0.15;
    return c;
  }();

  // segmentation, seconds
  double h_min = 0.05, h_max = 2.0;
  double validation_h_min = 1.0, validation_h_max = 2.0;

  // data
  double stage1_duration = 60.0;
  int stage1_trajectories = 1;
  double validation_duration = 60.0;
  NoiseSpec noise{0.001, 0.01, 0.01, 0.01, 0.001, 0.01, 0};
  ScheduleOptions schedule;

  // excitation
  std::vector<std::string> excite_channels{"v_x", "pitch"};
  Eigen::VectorXd excite_lower = Eigen::Vector2d(-0.5, -0.15);
  Eigen::VectorXd excite_upper = Eigen::Vector2d(0.8, 0.15);
  int excite_segments = 3;
  double excite_segment_duration = 4.0;
  int bezier_degree = 10;
  ExcitationConfig excitation;
  CmaesConfig excite_cmaes = [] {
    CmaesConfig c;
    c.population = 12;
    c.iterations = 10;
    c.sigma0 = 0.3;
    return c;
  }();

  std::uint64_t seed = 1;
  int threads = 0;

  ModelDescriptor Model() const {
    ModelDescriptor m = MakeModel(model);
    if (kp >= 0.0) m.pd.kp.setConstant(kp);
    if (kd >= 0.0) m.pd.kd.setConstant(kd);
    m.Validate();
    return m;
  }

  Eigen::VectorXd ActuatorFor(MotorModelKind kind, const Eigen::VectorXd& kappa,
                              const ModelDescriptor& m) const {
    switch (kind) {
      case MotorModelKind::kIdeal:
        return Eigen::VectorXd();
      case MotorModelKind::kLinearGain:
        return Eigen::VectorXd::Constant(1, theta0_linear_gain);
      case MotorModelKind::kUnifiedTanh:
        return Eigen::VectorXd::Constant(1, kappa.mean());
      case MotorModelKind::kGroupedTanh:
        if (kappa.size() != m.n_groups())
          throw ConfigurationError("kappa needs one entry per joint group (" +
                                   std::to_string(m.n_groups()) + ")");
        return kappa;
    }
    return kappa;
  }

  ParamVector Theta0(const ModelDescriptor& m) const {
    return MakeParams(m, theta0_body.Inertial(), motor,
                      ActuatorFor(motor, theta0_kappa, m));
  }
  ParamVector Theta0For(const ModelDescriptor& m, MotorModelKind kind) const {
    return MakeParams(m, theta0_body.Inertial(), kind,
                      ActuatorFor(kind, theta0_kappa, m));
  }
  ParamVector Truth(const ModelDescriptor& m) const {
    return MakeParams(m, truth_body.Inertial(), truth_motor,
                      ActuatorFor(truth_motor, truth_kappa, m));
  }
  SearchSpace Space(const ParamVector& theta0) const {
    return MakeSearchSpace(bounds, theta0, free);
  }

  void Validate() const {
    const ModelDescriptor m = Model();
    Space(Theta0(m));
    Truth(m);
    if (!(h_min > 0.0) || h_max < h_min)
      throw ConfigurationError("segmentation needs 0 < h_min <= h_max");
    if (!(validation_h_min > 0.0) || validation_h_max < validation_h_min)
      throw ConfigurationError("validation segmentation bounds are invalid");
    if (!(stage1_duration > 0.0) || !(validation_duration > 0.0) ||
        stage1_trajectories < 1)
      throw ConfigurationError("data durations must be positive");
    if (!(reference_fraction > 0.0) || !(reference_fraction < 1.0))
      throw ConfigurationError("reference_fraction must lie in (0, 1)");
    if (excite_lower.size() != static_cast<long>(excite_channels.size()) ||
        excite_upper.size() != static_cast<long>(excite_channels.size()))
      throw ConfigurationError("excitation bounds need one entry per channel");
    for (const auto& ch : excite_channels) CommandVector::ChannelIndex(ch);
    if (excite_segments < 0 || !(excite_segment_duration > 0.0) ||
        bezier_degree < 0)
      throw ConfigurationError("invalid excitation template");
    noise.Validate();
    cost.Validate();
  }
};

// ---------------------------------------------------------------------------
// JSON config.

namespace detail {

inline Eigen::VectorXd VecFromJson(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<long>(v.size()));
}

inline nlohmann::json VecToJson(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

inline Eigen::Matrix3d InertiaFromJson(const nlohmann::json& j) {
  // [Ixx, Iyy, Izz] or a full 3x3
  if (j.size() == 3 && j[0].is_number())
    return VecFromJson(j).asDiagonal();
  Eigen::Matrix3d m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m(r, c) = j.at(r).at(c).get<double>();
  return m;
}

inline BodySpec BodyFromJson(const nlohmann::json& j, BodySpec b) {
  if (j.contains("mass")) b.mass = j["mass"].get<double>();
  if (j.contains("com")) b.com = VecFromJson(j["com"]);
  if (j.contains("inertia")) b.inertia_com = InertiaFromJson(j["inertia"]);
  return b;
}

inline nlohmann::json BodyToJson(const BodySpec& b) {
  nlohmann::json in = nlohmann::json::array();
  for (int r = 0; r < 3; ++r)
    in.push_back({b.inertia_com(r, 0), b.inertia_com(r, 1), b.inertia_com(r, 2)});
  return {{"mass", b.mass}, {"com", VecToJson(b.com)}, {"inertia", in}};
}

inline CmaesConfig CmaesFromJson(const nlohmann::json& j, CmaesConfig c) {
  c.population = j.value("population", c.population);
  c.iterations = j.value("iterations", c.iterations);
  c.sigma0 = j.value("sigma0", c.sigma0);
  c.seed = j.value("seed", c.seed);
  return c;
}

inline nlohmann::json CmaesToJson(const CmaesConfig& c) {
  return {{"population", c.population}, {"iterations", c.iterations},
          {"sigma0", c.sigma0}, {"seed", c.seed}};
}

}  // namespace detail

inline PipelineConfig ConfigFromJson(const nlohmann::json& j) {
  PipelineConfig c;
  try {
    if (j.contains("model")) {
      const auto& m = j["model"];
      if (m.is_string()) {
        c.model = m.get<std::string>();
      } else {
        c.model = m.value("name", c.model);
        c.kp = m.value("kp", c.kp);
        c.kd = m.value("kd", c.kd);
      }
    }
    if (j.contains("theta0")) {
      const auto& t = j["theta0"];
      c.theta0_body = detail::BodyFromJson(t, c.theta0_body);
      if (t.contains("kappa")) c.theta0_kappa = detail::VecFromJson(t["kappa"]);
      c.theta0_linear_gain = t.value("linear_gain", c.theta0_linear_gain);
      if (t.contains("motor"))
        c.motor = MotorModelFromString(t["motor"].get<std::string>());
    }
    if (j.contains("truth")) {
      const auto& t = j["truth"];
      c.truth_body = detail::BodyFromJson(t, c.truth_body);
      if (t.contains("kappa")) c.truth_kappa = detail::VecFromJson(t["kappa"]);
      if (t.contains("motor"))
        c.truth_motor = MotorModelFromString(t["motor"].get<std::string>());
    }
    if (j.contains("bounds")) {
      const auto& b = j["bounds"];
      auto& o = c.bounds;
      if (b.contains("mass")) {
        o.mass_min = b["mass"].at(0).get<double>();
        o.mass_max = b["mass"].at(1).get<double>();
      }
      if (b.contains("com_min")) o.com_min = detail::VecFromJson(b["com_min"]);
      if (b.contains("com_max")) o.com_max = detail::VecFromJson(b["com_max"]);
      if (b.contains("inertia_min"))
        o.inertia_diag_min = detail::VecFromJson(b["inertia_min"]);
      if (b.contains("inertia_max"))
        o.inertia_diag_max = detail::VecFromJson(b["inertia_max"]);
      if (b.contains("kappa")) {
        o.kappa_min = b["kappa"].at(0).get<double>();
        o.kappa_max = b["kappa"].at(1).get<double>();
      }
      if (b.contains("linear_gain")) {
        o.linear_gain_min = b["linear_gain"].at(0).get<double>();
        o.linear_gain_max = b["linear_gain"].at(1).get<double>();
      }
      if (b.contains("free"))
        c.free = b["free"].get<std::vector<std::string>>();
    }
    if (j.contains("cost")) {
      c.cost = WeightsFromJson(j["cost"]);
      c.reference_fraction =
          j["cost"].value("reference_fraction", c.reference_fraction);
    }
    if (j.contains("cmaes")) {
      const auto& m = j["cmaes"];
      if (m.contains("stage1")) c.stage1 = detail::CmaesFromJson(m["stage1"], c.stage1);
      if (m.contains("stage2")) c.stage2 = detail::CmaesFromJson(m["stage2"], c.stage2);
      if (m.contains("excitation"))
        c.excite_cmaes = detail::CmaesFromJson(m["excitation"], c.excite_cmaes);
    }
    if (j.contains("segmentation")) {
      const auto& s = j["segmentation"];
      c.h_min = s.value("h_min", c.h_min);
      c.h_max = s.value("h_max", c.h_max);
      c.validation_h_min = s.value("validation_h_min", c.validation_h_min);
      c.validation_h_max = s.value("validation_h_max", c.validation_h_max);
    }
    if (j.contains("data")) {
      const auto& d = j["data"];
      c.stage1_duration = d.value("stage1_duration", c.stage1_duration);
      c.stage1_trajectories = d.value("stage1_trajectories", c.stage1_trajectories);
      c.validation_duration = d.value("validation_duration", c.validation_duration);
      c.schedule.vx_min = d.value("vx_min", c.schedule.vx_min);
      c.schedule.vx_max = d.value("vx_max", c.schedule.vx_max);
      c.schedule.pitch_max = d.value("pitch_max", c.schedule.pitch_max);
      c.schedule.vary_gait = d.value("vary_gait", c.schedule.vary_gait);
    }
    if (j.contains("excitation")) {
      const auto& e = j["excitation"];
      if (e.contains("channels"))
        c.excite_channels = e["channels"].get<std::vector<std::string>>();
      if (e.contains("lower")) c.excite_lower = detail::VecFromJson(e["lower"]);
      if (e.contains("upper")) c.excite_upper = detail::VecFromJson(e["upper"]);
      c.excite_segments = e.value("segments", c.excite_segments);
      c.excite_segment_duration =
          e.value("segment_duration", c.excite_segment_duration);
      c.bezier_degree = e.value("degree", c.bezier_degree);
      c.excitation.reg = e.value("reg", c.excitation.reg);
      c.excitation.penalty = e.value("penalty", c.excitation.penalty);
      c.excitation.fim.sigma = e.value("sigma", c.excitation.fim.sigma);
      c.excitation.fim.eps = e.value("eps", c.excitation.fim.eps);
      c.excitation.fim.seeds = e.value("fim_seeds", c.excitation.fim.seeds);
      c.excitation.gait_passes = e.value("gait_passes", c.excitation.gait_passes);
    }
    if (j.contains("noise")) c.noise = NoiseFromJson(j["noise"]);
    if (j.contains("seeds")) {
      const auto& s = j["seeds"];
      c.seed = s.value("base", c.seed);
    }
    c.threads = j.value("threads", c.threads);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigurationError(std::string("bad config: ") + e.what());
  }
  c.Validate();
  return c;
}

inline nlohmann::json ConfigToJson(const PipelineConfig& c) {
  nlohmann::json b = {
      {"mass", {c.bounds.mass_min, c.bounds.mass_max}},
      {"com_min", detail::VecToJson(c.bounds.com_min)},
      {"com_max", detail::VecToJson(c.bounds.com_max)},
      {"inertia_min", detail::VecToJson(c.bounds.inertia_diag_min)},
      {"inertia_max", detail::VecToJson(c.bounds.inertia_diag_max)},
      {"kappa", {c.bounds.kappa_min, c.bounds.kappa_max}},
      {"linear_gain", {c.bounds.linear_gain_min, c.bounds.linear_gain_max}},
      {"free", c.free}};
  nlohmann::json t0 = detail::BodyToJson(c.theta0_body);
  t0["kappa"] = detail::VecToJson(c.theta0_kappa);
  t0["linear_gain"] = c.theta0_linear_gain;
  t0["motor"] = std::string(ToString(c.motor));
  nlohmann::json tt = detail::BodyToJson(c.truth_body);
  tt["kappa"] = detail::VecToJson(c.truth_kappa);
  tt["motor"] = std::string(ToString(c.truth_motor));
  nlohmann::json cost = WeightsToJson(c.cost);
  cost["reference_fraction"] = c.reference_fraction;
  return {
      {"model", {{"name", c.model}, {"kp", c.kp}, {"kd", c.kd}}},
      {"theta0", t0},
      {"truth", tt},
      {"bounds", b},
      {"cost", cost},
      {"cmaes",
       {{"stage1", detail::CmaesToJson(c.stage1)},
        {"stage2", detail::CmaesToJson(c.stage2)},
        {"excitation", detail::CmaesToJson(c.excite_cmaes)}}},
      {"segmentation",
       {{"h_min", c.h_min},
        {"h_max", c.h_max},
        {"validation_h_min", c.validation_h_min},
        {"validation_h_max", c.validation_h_max}}},
      {"data",
       {{"stage1_duration", c.stage1_duration},
        {"stage1_trajectories", c.stage1_trajectories},
        {"validation_duration", c.validation_duration},
        {"vx_min", c.schedule.vx_min},
        {"vx_max", c.schedule.vx_max},
        {"pitch_max", c.schedule.pitch_max},
        {"vary_gait", c.schedule.vary_gait}}},
      {"excitation",
       {{"channels", c.excite_channels},
        {"lower", detail::VecToJson(c.excite_lower)},
        {"upper", detail::VecToJson(c.excite_upper)},
        {"segments", c.excite_segments},
        {"segment_duration", c.excite_segment_duration},
        {"degree", c.bezier_degree},
        {"reg", c.excitation.reg},
        {"penalty", c.excitation.penalty},
        {"sigma", c.excitation.fim.sigma},
        {"eps", c.excitation.fim.eps},
        {"fim_seeds", c.excitation.fim.seeds},
        {"gait_passes", c.excitation.gait_passes}}},
      {"noise", NoiseToJson(c.noise)},
      {"seeds", {{"base", c.seed}}},
      {"threads", c.threads}};
}

inline PipelineConfig LoadConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open config " + path.string());
  try {
    return ConfigFromJson(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigurationError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Parameter files.

inline nlohmann::json ThetaToJson(const ParamVector& p) {
  const InertialParams in = p.Inertial();
  const Eigen::Matrix3d ic = in.InertiaAboutCom();
  nlohmann::json inertia = nlohmann::json::array();
  for (int r = 0; r < 3; ++r) inertia.push_back({ic(r, 0), ic(r, 1), ic(r, 2)});
  return {{"motor", std::string(ToString(p.motor))},
          {"phi", detail::VecToJson(p.phi.phi)},
          {"actuator", detail::VecToJson(p.actuator)},
          {"mass", in.mass},
          {"com", detail::VecToJson(in.com)},
          {"inertia_com", inertia}};
}

inline ParamVector ThetaFromJson(const nlohmann::json& j) {
  try {
    ParamVector p;
    p.motor = MotorModelFromString(j.at("motor").get<std::string>());
    const Eigen::VectorXd phi = detail::VecFromJson(j.at("phi"));
    if (phi.size() != 10) throw ConfigurationError("phi needs 10 entries");
    p.phi.phi = phi;
    p.actuator = detail::VecFromJson(j.at("actuator"));
    if (!p.Flat().allFinite())
      throw ConfigurationError("parameter file has non-finite entries");
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigurationError(std::string("bad parameter file: ") + e.what());
  }
}

inline void WriteJson(const std::filesystem::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigurationError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

inline nlohmann::json ReadJson(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigurationError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Errors against ground truth.

// Euclidean distance between the identifiable physical quantities of two
// parameter sets, each divided by the width of its sampling range: mass,
// CoM, CoM-frame inertia (planar: x/z CoM and pitch inertia only) and the
// actuator gains when both sets use the same motor model.
inline double ParamError(const ParamVector& est, const ParamVector& truth,
                         const PhysicalBounds& b, const ModelDescriptor& model) {
  const InertialParams e = est.Inertial(), t = truth.Inertial();
  const Eigen::Matrix3d ie = e.InertiaAboutCom(), it = t.InertiaAboutCom();
  std::vector<double> d;
  d.push_back((e.mass - t.mass) / (b.mass_max - b.mass_min));
  const std::vector<int> axes =
      model.kind == ModelKind::kPlanarQuadruped ? std::vector<int>{0, 2}
                                                : std::vector<int>{0, 1, 2};
  for (int a : axes)
    d.push_back((e.com(a) - t.com(a)) / (b.com_max(a) - b.com_min(a)));
  const std::vector<int> rot =
      model.kind == ModelKind::kPlanarQuadruped ? std::vector<int>{1}
                                                : std::vector<int>{0, 1, 2};
  for (int a : rot)
    d.push_back((ie(a, a) - it(a, a)) /
                (b.inertia_diag_max(a) - b.inertia_diag_min(a)));
  if (est.motor == truth.motor && est.actuator.size() == truth.actuator.size()) {
    const double w = est.motor == MotorModelKind::kLinearGain
                         ? b.linear_gain_max - b.linear_gain_min
                         : b.kappa_max - b.kappa_min;
    for (long i = 0; i < est.actuator.size(); ++i)
      d.push_back((est.actuator(i) - truth.actuator(i)) / w);
  }
  double s = 0.0;
  for (double v : d) s += v * v;
  return std::sqrt(s);
}

struct EvalMetrics {
  double j_rpos = 0.0;  // m
  double j_pja = 0.0;   // rad
  double j_rvel = 0.0;  // m/s
  std::size_t clips = 0;
  std::size_t diverged = 0;
  double n_rpos = 1.0, n_pja = 1.0, n_rvel = 1.0;  // ratios to a baseline

  nlohmann::json ToJson() const {
    return {{"j_rpos", j_rpos}, {"j_pja", j_pja}, {"j_rvel", j_rvel},
            {"clips", clips},   {"diverged", diverged},
            {"normalized", {{"j_rpos", n_rpos}, {"j_pja", n_pja}, {"j_rvel", n_rvel}}}};
  }
};

inline void NormalizeAgainst(EvalMetrics& m, const EvalMetrics& baseline) {
  auto ratio = [](double a, double b) { return b > 0.0 ? a / b : (a > 0.0 ? INFINITY : 1.0); };
  m.n_rpos = ratio(m.j_rpos, baseline.j_rpos);
  m.n_pja = ratio(m.j_pja, baseline.j_pja);
  m.n_rvel = ratio(m.j_rvel, baseline.j_rvel);
}

// Open-loop prediction errors on validation clips, pooled over all clips
// and ticks. Divergent clips are skipped and counted.
inline EvalMetrics EvaluatePrediction(const ParamVector& theta,
                                      const ClipSet& validation,
                                      const ModelDescriptor& model,
                                      int threads = 1) {
  if (validation.empty()) throw InvalidArgument("no validation clips");
  struct Acc {
    double rpos = 0, pja = 0, rvel = 0;
    long ticks = 0;
    bool ok = true;
  };
  std::vector<Acc> acc(validation.size());
  ParallelFor(
      validation.size(),
      [&](std::size_t i) {
        const Clip& c = validation.clips[i];
        const Trajectory& tr = validation.TrajectoryOf(c);
        Acc a;
        SimState x = tr.states[static_cast<std::size_t>(c.start)];
        const double nj = static_cast<double>(x.q_jnt.size());
        try {
          for (int k = 0; k < c.horizon; ++k) {
            const std::size_t s = static_cast<std::size_t>(c.start + k);
            x = Step(x, tr.inputs[s], theta, model);
            const SimState& r = tr.states[s + 1];
            a.rpos += (x.p - r.p).norm();
            a.pja += (x.q_jnt - r.q_jnt).cwiseAbs().sum() / nj;
            a.rvel += (x.v - r.v).norm();
            ++a.ticks;
          }
        } catch (const NumericalError&) {
          a = Acc{};
          a.ok = false;
        }
        acc[i] = a;
      },
      threads);
  EvalMetrics m;
  m.clips = validation.size();
  long ticks = 0;
  for (const auto& a : acc) {
    if (!a.ok) {
      ++m.diverged;
      continue;
    }
    m.j_rpos += a.rpos;
    m.j_pja += a.pja;
    m.j_rvel += a.rvel;
    ticks += a.ticks;
  }
  if (2 * m.diverged > m.clips)
    throw EvaluationFailed(std::to_string(m.diverged) + " of " +
                           std::to_string(m.clips) +
                           " validation clips diverged");
  if (ticks > 0) {
    m.j_rpos /= ticks;
    m.j_pja /= ticks;
    m.j_rvel /= ticks;
  }
  return m;
}

// ---------------------------------------------------------------------------
// Data generation.

struct Datasets {
  std::vector<TrajectoryPtr> stage1;
  std::vector<TrajectoryPtr> validation;
};

inline std::shared_ptr<const Controller> PipelineController(const PipelineConfig& c) {
  return MakeController(c.Model());
}

inline Datasets GenerateDatasets(const PipelineConfig& c, std::uint64_t seed) {
  const ModelDescriptor model = c.Model();
  const ParamVector truth = c.Truth(model);
  const auto ctl = PipelineController(c);
  const SimState x0 = DefaultInitialState(model);
  Datasets d;
  for (int i = 0; i < c.stage1_trajectories; ++i) {
    NoiseSpec n = c.noise;
    n.seed = seed * 1000003ULL + 17ULL * i + 1;
    const auto sched = RandomCommandSchedule(model, c.stage1_duration,
                                             seed * 7919ULL + i, c.schedule);
    auto g = GenerateSynthetic(truth, *ctl, sched, c.stage1_duration, n, model,
                               x0, "stage1_" + std::to_string(i));
    d.stage1.push_back(std::make_shared<const Trajectory>(std::move(g.logged)));
  }
  NoiseSpec n = c.noise;
  n.seed = seed * 1000003ULL + 999983ULL;
  const auto sched = RandomCommandSchedule(model, c.validation_duration,
                                           seed * 7919ULL + 65537ULL, c.schedule);
  auto g = GenerateSynthetic(truth, *ctl, sched, c.validation_duration, n,
                             model, x0, "validation");
  d.validation.push_back(std::make_shared<const Trajectory>(std::move(g.logged)));
  return d;
}

inline ClipSet SegmentSeconds(const std::vector<TrajectoryPtr>& trajs,
                              double h_min, double h_max, double dt,
                              std::uint64_t seed) {
  return SegmentAll(trajs, HorizonSteps(h_min, dt), HorizonSteps(h_max, dt), seed);
}

// ---------------------------------------------------------------------------
// Identification.

struct IdentifyResult {
  ParamVector theta;
  OptResult opt;
  CostReport initial, final;
  CostWeights weights;
  std::size_t identification_clips = 0;
  std::size_t reference_clips = 0;

  nlohmann::json ToJson() const {
    nlohmann::json curve = nlohmann::json::array();
    for (const auto& g : opt.history)
      curve.push_back({{"generation", g.generation},
                       {"best", g.best_so_far},
                       {"mean", g.mean},
                       {"sigma", g.sigma}});
    return {{"theta", ThetaToJson(theta)},
            {"evaluations", opt.evaluations},
            {"cost_curve", curve},
            {"initial", initial.ToJson()["terms"]},
            {"final", final.ToJson()},
            {"weights", WeightsToJson(weights)},
            {"identification_clips", identification_clips},
            {"reference_clips", reference_clips}};
  }
};

// Segments the data, normalizes weights on the leading reference clips at
// `anchor`, then runs CMA-ES from `anchor` over the remaining clips. The
// regularizer pulls towards `anchor` as well.
inline IdentifyResult Identify(const PipelineConfig& c,
                               const std::vector<TrajectoryPtr>& data,
                               const ParamVector& anchor,
                               const CmaesConfig& cmaes, std::uint64_t seed,
                               double h_min, double h_max) {
  if (data.empty()) throw ConfigurationError("identification dataset is empty");
  const ModelDescriptor model = c.Model();
  const ClipSet all = SegmentSeconds(data, h_min, h_max, model.dt_control, seed);
  auto [reference, ident] = all.SplitHead(c.reference_fraction);
  if (ident.empty()) ident = reference;
  IdentifyResult res;
  res.reference_clips = reference.size();
  res.identification_clips = ident.size();
  res.weights = NormalizeWeights(c.cost, reference, anchor, model,
                                 ResolveThreads(c.threads));
  const SearchSpace space = c.Space(anchor);
  res.initial = TotalCost(anchor, ident, res.weights, anchor, model,
                          ResolveThreads(c.threads));
  res.theta = anchor;
  if (space.Dim() == 0 || cmaes.iterations <= 0) {
    res.final = res.initial;
    res.opt.best_value = res.initial.total;
    return res;
  }
  CmaesConfig cc = cmaes;
  cc.lower = Eigen::VectorXd::Zero(space.Dim());
  cc.upper = Eigen::VectorXd::Ones(space.Dim());
  cc.seed = cmaes.seed + seed;
  cc.threads = ResolveThreads(c.threads);
  res.opt = CmaesMinimize(
      [&](const Eigen::VectorXd& z) {
        try {
          return TotalCost(space.Denormalize(z), ident, res.weights, anchor,
                           model, 1)
              .total;
        } catch (const EvaluationFailed&) {
          return std::numeric_limits<double>::infinity();
        }
      },
      space.Normalize(anchor).cwiseMax(0.0).cwiseMin(1.0), cc);
  if (res.opt.best_value < res.initial.total)
    res.theta = space.Denormalize(res.opt.best);
  res.final = TotalCost(res.theta, ident, res.weights, anchor, model,
                        ResolveThreads(c.threads));
  return res;
}

inline IdentifyResult Stage1Identify(const PipelineConfig& c,
                                     const std::vector<TrajectoryPtr>& d0,
                                     std::uint64_t seed) {
  const ModelDescriptor model = c.Model();
  return Identify(c, d0, c.Theta0(model), c.stage1, seed, c.h_min, c.h_max);
}

enum class ExplorationMode { kActive, kRandom };

struct Stage2Result {
  BezierCommandPlan plan;
  PlanEvaluation plan_eval;
  double penalty = 0.0;
  TrajectoryPtr d1;
  IdentifyResult identify;
};

inline BezierCommandPlan PlanTemplate(const PipelineConfig& c) {
  std::vector<int> ch;
  for (const auto& n : c.excite_channels) ch.push_back(CommandVector::ChannelIndex(n));
  const Eigen::VectorXd mid = 0.5 * (c.excite_lower + c.excite_upper);
  Eigen::VectorXd value = mid;
  for (std::size_t i = 0; i < ch.size(); ++i)
    if (ch[i] == CommandVector::kPitch || ch[i] == CommandVector::kRoll)
      value(static_cast<long>(i)) = 0.0;
  return ConstantPlan(ch, value, c.excite_segments, c.excite_segment_duration,
                      c.bezier_degree);
}

inline ExcitationConfig ExcitationSettings(const PipelineConfig& c) {
  ExcitationConfig e = c.excitation;
  e.channel_lower = c.excite_lower;
  e.channel_upper = c.excite_upper;
  return e;
}

struct ExcitationResult {
  BezierCommandPlan plan;
  PlanEvaluation plan_eval;
  double penalty = 0.0;
  TrajectoryPtr d1;
  std::vector<double> history;  // best objective per generation (active)
};

// Plan selection under theta_hat1 (optimized or random) and D1 generation
// under the hidden truth.
inline ExcitationResult Excite(const PipelineConfig& c,
                               const ParamVector& theta_hat1,
                               std::uint64_t seed,
                               ExplorationMode mode = ExplorationMode::kActive) {
  const ModelDescriptor model = c.Model();
  const auto ctl = PipelineController(c);
  const SimState x0 = DefaultInitialState(model);
  const SearchSpace space = c.Space(theta_hat1);
  const BezierCommandPlan tmpl = PlanTemplate(c);
  const ExcitationConfig ex = ExcitationSettings(c);
  ExcitationResult r;
  CmaesConfig ec = c.excite_cmaes;
  ec.seed = c.excite_cmaes.seed + seed;
  ec.threads = ResolveThreads(c.threads);
  if (mode == ExplorationMode::kActive) {
    const auto opt = OptimizePlan(theta_hat1, *ctl, model, space, ec, tmpl, ex, x0);
    r.plan = opt.plan;
    r.plan_eval = opt.evaluation;
    r.penalty = opt.penalty;
    r.history = opt.history;
  } else {
    std::mt19937_64 rng(seed * 2654435761ULL + 12345ULL);
    r.plan = RandomPlan(tmpl, ex, rng);
    r.penalty = ex.penalty > 0.0
                    ? ex.penalty
                    : ex.penalty_factor *
                          EvaluatePlan(tmpl, x0, theta_hat1, *ctl, model, space,
                                       ex, 0.0)
                              .objective;
    r.plan_eval =
        EvaluatePlan(r.plan, x0, theta_hat1, *ctl, model, space, ex, r.penalty);
  }
  NoiseSpec n = c.noise;
  n.seed = seed * 1000003ULL + 424242ULL;
  auto g = GenerateSynthetic(c.Truth(model), *ctl,
                             PlanToCommands(r.plan, model.dt_control, ex.fixed),
                             r.plan.Duration(), n, model, x0, "excite_0");
  r.d1 = std::make_shared<const Trajectory>(std::move(g.logged));
  return r;
}

// Identification on D0 + D1 warm-started (and regularized) at theta_hat1.
inline IdentifyResult Refine(const PipelineConfig& c,
                             const ParamVector& theta_hat1,
                             std::vector<TrajectoryPtr> data, std::uint64_t seed) {
  const ModelDescriptor model = c.Model();
  const int h = HorizonSteps(c.h_min, model.dt_control);
  std::erase_if(data, [&](const TrajectoryPtr& t) {
    return t == nullptr || t->Steps() < static_cast<std::size_t>(h);
  });
  return Identify(c, data, theta_hat1, c.stage2, seed + 1, c.h_min, c.h_max);
}

// Excite then Refine. A zero stage-2 budget returns theta_hat1 unchanged.
inline Stage2Result Stage2Active(const PipelineConfig& c,
                                 const ParamVector& theta_hat1,
                                 const std::vector<TrajectoryPtr>& d0,
                                 std::uint64_t seed,
                                 ExplorationMode mode = ExplorationMode::kActive) {
  Stage2Result r;
  r.plan = PlanTemplate(c);
  if (c.stage2.iterations <= 0 || r.plan.segments.empty()) {
    r.identify.theta = theta_hat1;
    return r;
  }
  const ExcitationResult e = Excite(c, theta_hat1, seed, mode);
  r.plan = e.plan;
  r.plan_eval = e.plan_eval;
  r.penalty = e.penalty;
  r.d1 = e.d1;
  std::vector<TrajectoryPtr> data = d0;
  data.push_back(r.d1);
  r.identify = Refine(c, theta_hat1, data, seed);
  return r;
}

// ---------------------------------------------------------------------------
// Reports.

inline std::string CostCurveSvg(const std::vector<std::pair<std::string, OptResult>>& runs) {
  std::vector<Series> s;
  for (const auto& [name, r] : runs) {
    Series line{name, {}, {}};
    for (const auto& g : r.history) {
      line.x.push_back(g.generation);
      line.y.push_back(g.best_so_far);
    }
    s.push_back(line);
  }
  return LinePlotSvg(s, "Identification cost", "generation", "best cost", true);
}

// Base x/z of one validation trajectory replayed open loop from its first
// state under each parameter set, next to the recorded path.
inline std::string OverlaySvg(const Trajectory& tr,
                              const std::vector<std::pair<std::string, ParamVector>>& thetas,
                              const ModelDescriptor& model, double seconds = 2.0) {
  const int n = std::min<int>(static_cast<int>(tr.Steps()),
                              HorizonSteps(seconds, model.dt_control));
  std::vector<Series> s;
  Series rec{"recorded", {}, {}};
  for (int k = 0; k <= n; ++k) {
    rec.x.push_back(tr.states[static_cast<std::size_t>(k)].t);
    rec.y.push_back(tr.states[static_cast<std::size_t>(k)].p(0));
  }
  s.push_back(rec);
  for (const auto& [name, th] : thetas) {
    Series line{name, {}, {}};
    SimState x = tr.states.front();
    line.x.push_back(x.t);
    line.y.push_back(x.p(0));
    try {
      for (int k = 0; k < n; ++k) {
        x = Step(x, tr.inputs[static_cast<std::size_t>(k)], th, model);
        line.x.push_back(x.t);
        line.y.push_back(x.p(0));
      }
    } catch (const NumericalError&) {
    }
    s.push_back(line);
  }
  return LinePlotSvg(s, "Open-loop base x prediction", "t [s]", "x [m]");
}

inline void WriteText(const std::filesystem::path& p, const std::string& text) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream o(p);
  if (!o) throw ConfigurationError("cannot write " + p.string());
  o << text;
}

inline void WriteDatasets(const Datasets& d, const std::filesystem::path& dir) {
  for (std::size_t i = 0; i < d.stage1.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "stage1_%03zu", i);
    WriteTrajectory(*d.stage1[i], dir / name);
  }
  for (std::size_t i = 0; i < d.validation.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "validation_%03zu", i);
    WriteTrajectory(*d.validation[i], dir / name);
  }
}

struct FullRunResult {
  ParamVector theta0, theta1, theta_active, truth;
  EvalMetrics m0, m1, m_active;
  double err0 = 0, err1 = 0, err_active = 0;
  nlohmann::json report;
};

// End to end: data, stage 1, stage 2, validation metrics. Writes a report
// directory when `out` is non-empty.
inline FullRunResult FullRun(const PipelineConfig& c,
                             const std::filesystem::path& out = {}) {
  const ModelDescriptor model = c.Model();
  const Datasets d = GenerateDatasets(c, c.seed);
  FullRunResult r;
  r.theta0 = c.Theta0(model);
  r.truth = c.Truth(model);
  const IdentifyResult s1 = Stage1Identify(c, d.stage1, c.seed);
  r.theta1 = s1.theta;
  const Stage2Result s2 = Stage2Active(c, r.theta1, d.stage1, c.seed);
  r.theta_active = s2.identify.theta;
  const ClipSet val = SegmentSeconds(d.validation, c.validation_h_min,
                                     c.validation_h_max, model.dt_control,
                                     c.seed + 99);
  const int th = ResolveThreads(c.threads);
  r.m0 = EvaluatePrediction(r.theta0, val, model, th);
  r.m1 = EvaluatePrediction(r.theta1, val, model, th);
  r.m_active = EvaluatePrediction(r.theta_active, val, model, th);
  NormalizeAgainst(r.m1, r.m0);
  NormalizeAgainst(r.m_active, r.m0);
  NormalizeAgainst(r.m0, r.m0);
  r.err0 = ParamError(r.theta0, r.truth, c.bounds, model);
  r.err1 = ParamError(r.theta1, r.truth, c.bounds, model);
  r.err_active = ParamError(r.theta_active, r.truth, c.bounds, model);
  r.report = {{"theta0", ThetaToJson(r.theta0)},
              {"truth", ThetaToJson(r.truth)},
              {"stage1", s1.ToJson()},
              {"stage2", s2.identify.ToJson()},
              {"plan_objective", s2.plan_eval.objective},
              {"metrics",
               {{"theta0", r.m0.ToJson()},
                {"stage1", r.m1.ToJson()},
                {"active", r.m_active.ToJson()}}},
              {"param_error",
               {{"theta0", r.err0}, {"stage1", r.err1}, {"active", r.err_active}}}};
  if (!out.empty()) {
    std::filesystem::create_directories(out);
    WriteJson(out / "config.json", ConfigToJson(c));
    WriteDatasets(d, out / "data");
    if (s2.d1) WriteTrajectory(*s2.d1, out / "data" / "excite_000");
    WriteJson(out / "theta_stage1.json", ThetaToJson(r.theta1));
    WriteJson(out / "theta_active.json", ThetaToJson(r.theta_active));
    WriteJson(out / "theta0.json", ThetaToJson(r.theta0));
    WriteJson(out / "plan.json", PlanToJson(s2.plan));
    WriteJson(out / "metrics.json", r.report["metrics"]);
    WriteJson(out / "report.json", r.report);
    WriteText(out / "cost_curves.svg",
              CostCurveSvg({{"stage 1", s1.opt}, {"stage 2", s2.identify.opt}}));
    WriteText(out / "trajectory_overlay.svg",
              OverlaySvg(*d.validation.front(),
                         {{"theta0", r.theta0},
                          {"stage 1", r.theta1},
                          {"active", r.theta_active}},
                         model));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Ablations.

inline double Median(std::vector<double> v) {
  if (v.empty()) return NAN;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct AblationSetting {
  std::string name;
  double h_min = 0.05, h_max = 2.0;
  MotorModelKind motor = MotorModelKind::kGroupedTanh;
};

struct AblationRow {
  std::string name;
  std::vector<double> param_error, j_rpos;
};

inline std::vector<AblationSetting> HorizonSettings() {
  return {{"fixed_0.05s", 0.05, 0.05},
          {"fixed_0.5s", 0.5, 0.5},
          {"fixed_1.0s", 1.0, 1.0},
          {"fixed_2.0s", 2.0, 2.0},
          {"uniform_0.05-2s", 0.05, 2.0}};
}

inline std::vector<AblationSetting> MotorSettings() {
  std::vector<AblationSetting> s;
  for (auto k : {MotorModelKind::kIdeal, MotorModelKind::kLinearGain,
                 MotorModelKind::kUnifiedTanh, MotorModelKind::kGroupedTanh})
    s.push_back({std::string(ToString(k)), 0.05, 2.0, k});
  return s;
}

// kind: "horizon" or "motor-model". Every setting sees the same data per
// seed; validation J_rpos and parameter error are reported per seed.
inline std::vector<AblationRow> RunAblation(const std::string& kind,
                                            const PipelineConfig& c,
                                            const std::vector<std::uint64_t>& seeds,
                                            std::vector<AblationSetting> settings = {}) {
  if (settings.empty()) {
    if (kind == "horizon")
      settings = HorizonSettings();
    else if (kind == "motor-model" || kind == "motor_model")
      settings = MotorSettings();
    else
      throw ConfigurationError("unknown ablation kind '" + kind + "'");
  }
  const ModelDescriptor model = c.Model();
  std::vector<AblationRow> rows;
  for (const auto& s : settings) rows.push_back({s.name, {}, {}});
  for (std::uint64_t seed : seeds) {
    const Datasets d = GenerateDatasets(c, seed);
    const ClipSet val = SegmentSeconds(d.validation, c.validation_h_min,
                                       c.validation_h_max, model.dt_control,
                                       seed + 99);
    for (std::size_t i = 0; i < settings.size(); ++i) {
      PipelineConfig cc = c;
      cc.motor = settings[i].motor;
      const IdentifyResult r =
          Identify(cc, d.stage1, cc.Theta0For(model, settings[i].motor),
                   cc.stage1, seed, settings[i].h_min, settings[i].h_max);
      rows[i].param_error.push_back(
          ParamError(r.theta, c.Truth(model), c.bounds, model));
      rows[i].j_rpos.push_back(
          EvaluatePrediction(r.theta, val, model, ResolveThreads(c.threads)).j_rpos);
    }
  }
  return rows;
}

inline nlohmann::json AblationToJson(const std::vector<AblationRow>& rows) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : rows)
    j.push_back({{"setting", r.name},
                 {"param_error", r.param_error},
                 {"j_rpos", r.j_rpos},
                 {"median_param_error", Median(r.param_error)},
                 {"median_j_rpos", Median(r.j_rpos)}});
  return j;
}

}  // namespace sampid

#endif  // SAMPID_PIPELINE_HPP_
