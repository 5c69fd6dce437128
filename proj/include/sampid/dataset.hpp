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

// Recorded trajectories, synthetic data generation and clip segmentation.
//
// A trajectory with N inputs has N + 1 states; tau_meas[k] is the applied
// torque over the period that starts at states[k]. Clips tile the transition
// indices [0, N).

#ifndef SAMPID_DATASET_HPP_
#define SAMPID_DATASET_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sampid/controller.hpp"
#include "sampid/dynamics.hpp"
#include "sampid/errors.hpp"
#include "sampid/state.hpp"

namespace sampid {

struct NoiseSpec {
  double position = 0.0;      // m
  double orientation = 0.0;   // rad, rotation-vector components
  double linear_velocity = 0.0;   // m/s
  double angular_velocity = 0.0;  // rad/s
  double joint_position = 0.0;    // rad
  double joint_velocity = 0.0;    // rad/s
  std::uint64_t seed = 0;

  void Validate() const {
    for (double s : {position, orientation, linear_velocity, angular_velocity,
                     joint_position, joint_velocity})
      if (!(s >= 0.0)) throw ConfigurationError("noise sigma must be >= 0");
  }
  bool Zero() const {
    return position == 0.0 && orientation == 0.0 && linear_velocity == 0.0 &&
           angular_velocity == 0.0 && joint_position == 0.0 &&
           joint_velocity == 0.0;
  }
};

struct TrajectoryMeta {
  std::string source_id;
  std::string model_name;
  double dt_control = 0.02;
  std::uint64_t seed = 0;
  NoiseSpec noise;
  double fall_time = -1.0;  // < 0: no fall
};

struct Trajectory {
  std::vector<SimState> states;
  std::vector<ControlInput> inputs;
  std::vector<Eigen::VectorXd> tau_meas;
  TrajectoryMeta meta;

  std::size_t Steps() const { return inputs.size(); }

  void Validate() const {
    if (states.size() != inputs.size() + 1 ||
        tau_meas.size() != inputs.size())
      throw InvalidArgument("trajectory needs |states| = |inputs| + 1 = "
                            "|tau_meas| + 1");
    for (std::size_t k = 1; k < states.size(); ++k)
      if (!(states[k].t > states[k - 1].t))
        throw InvalidArgument("trajectory timestamps must increase");
  }
};

using TrajectoryPtr = std::shared_ptr<const Trajectory>;

struct Clip {
  int trajectory = 0;
  int start = 0;
  int horizon = 1;
};

struct ClipSet {
  std::vector<TrajectoryPtr> trajectories;
  std::vector<Clip> clips;

  bool empty() const { return clips.empty(); }
  std::size_t size() const { return clips.size(); }

  const Trajectory& TrajectoryOf(const Clip& c) const {
    return *trajectories.at(static_cast<std::size_t>(c.trajectory));
  }

  // Union with another set; trajectory indices of `other` are shifted.
  ClipSet Merge(const ClipSet& other) const {
    ClipSet out = *this;
    const int offset = static_cast<int>(trajectories.size());
    out.trajectories.insert(out.trajectories.end(), other.trajectories.begin(),
                            other.trajectories.end());
    for (Clip c : other.clips) {
      c.trajectory += offset;
      out.clips.push_back(c);
    }
    return out;
  }

  // First `fraction` of the clips (at least one) and the remainder, both
  // sharing the trajectory list.
  std::pair<ClipSet, ClipSet> SplitHead(double fraction) const {
    if (clips.empty()) throw InvalidArgument("cannot split an empty clip set");
    std::size_t n = static_cast<std::size_t>(
        std::floor(fraction * static_cast<double>(clips.size())));
    n = std::clamp<std::size_t>(n, 1, clips.size());
    ClipSet head{trajectories, {clips.begin(), clips.begin() + n}};
    ClipSet tail{trajectories, {clips.begin() + n, clips.end()}};
    return {head, tail};
  }
};

inline int HorizonSteps(double seconds, double dt) {
  return std::max(1, static_cast<int>(std::lround(seconds / dt)));
}

// Greedy left-to-right tiling with H ~ U{h_min, ..., h_max}. A final piece
// shorter than h_min is merged into the previous clip.
inline std::vector<Clip> Segment(const Trajectory& traj, int trajectory_id,
                                 int h_min, int h_max, std::uint64_t seed) {
  const int n = static_cast<int>(traj.Steps());
  if (h_min < 1 || h_max < h_min)
    throw ConfigurationError("horizon bounds need 1 <= h_min <= h_max");
  if (n < h_min)
    throw InvalidArgument("trajectory shorter than the minimum horizon");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> draw(h_min, h_max);
  std::vector<Clip> clips;
  int start = 0;
  while (start < n) {
    const int h = std::min(draw(rng), n - start);
    if (h < h_min) {
      clips.back().horizon += h;
      break;
    }
    clips.push_back({trajectory_id, start, h});
    start += h;
  }
  return clips;
}

inline ClipSet SegmentAll(const std::vector<TrajectoryPtr>& trajs, int h_min,
                          int h_max, std::uint64_t seed) {
  ClipSet set;
  set.trajectories = trajs;
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    auto c = Segment(*trajs[i], static_cast<int>(i), h_min, h_max,
                     seed + 7919ULL * i);
    set.clips.insert(set.clips.end(), c.begin(), c.end());
  }
  return set;
}

// ---------------------------------------------------------------------------
// Synthetic data.

// Adds observation noise to the channels the model actually moves in. Frozen
// coordinates (planar y, roll, yaw; a fixed base) stay exact.
inline SimState Observe(const SimState& s, const NoiseSpec& n,
                        const ModelDescriptor& model, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  SimState o = s;
  if (model.floating_base()) {
    o.p(0) += n.position * g(rng);
    o.p(2) += n.position * g(rng);
    o.v(0) += n.linear_velocity * g(rng);
    o.v(2) += n.linear_velocity * g(rng);
    o.omega(1) += n.angular_velocity * g(rng);
    const double dpitch = n.orientation * g(rng);
    o.quat = QuatMultiply(PitchQuat(dpitch), s.quat);
    o.quat.normalize();
  }
  for (int j = 0; j < o.q_jnt.size(); ++j) {
    o.q_jnt(j) += n.joint_position * g(rng);
    o.dq_jnt(j) += n.joint_velocity * g(rng);
  }
  return o;
}

inline bool HasFallen(const SimState& s, const ModelDescriptor& model) {
  if (!model.floating_base()) return false;
  return s.p(2) < model.fall_height ||
         std::abs(QuatPitch(s.quat)) > model.fall_pitch;
}

struct SyntheticData {
  Trajectory logged;            // noisy observations, exact inputs/torques
  std::vector<SimState> truth;  // noise-free states
};

// Closed-loop rollout under theta_true. schedule[k] is the command at tick
// k; the last entry is held when the schedule is shorter than the run. With
// stop_on_fall the run ends at the first fallen state.
inline SyntheticData GenerateSynthetic(const ParamVector& theta_true,
                                       const Controller& controller,
                                       const std::vector<CommandVector>& schedule,
                                       double duration, const NoiseSpec& noise,
                                       const ModelDescriptor& model,
                                       const SimState& x0,
                                       const std::string& source_id = "synthetic",
                                       bool stop_on_fall = true) {
  if (!(duration > 0.0)) throw ConfigurationError("duration must be positive");
  if (schedule.empty()) throw ConfigurationError("empty command schedule");
  noise.Validate();
  const int ticks = HorizonSteps(duration, model.dt_control);
  std::mt19937_64 rng(noise.seed);
  SyntheticData out;
  Trajectory& tr = out.logged;
  tr.meta = {source_id, model.name, model.dt_control, noise.seed, noise, -1.0};
  SimState x = x0;
  out.truth.push_back(x);
  tr.states.push_back(Observe(x, noise, model, rng));
  for (int k = 0; k < ticks; ++k) {
    const CommandVector& c =
        schedule[std::min<std::size_t>(static_cast<std::size_t>(k),
                                       schedule.size() - 1)];
    const ControlInput u = controller.Act(x, c);
    StepResult r;
    try {
      r = StepWithTorque(x, u, theta_true, model);
    } catch (const DivergenceError& e) {
      throw DivergenceError(e.field(), x.t, k);
    }
    x = r.state;
    tr.inputs.push_back(u);
    tr.tau_meas.push_back(r.tau);
    out.truth.push_back(x);
    tr.states.push_back(Observe(x, noise, model, rng));
    if (stop_on_fall && HasFallen(x, model)) {
      tr.meta.fall_time = x.t;
      break;
    }
  }
  return out;
}

struct ScheduleOptions {
  double segment_min = 2.0;  // s, command hold/blend segment length
  double segment_max = 4.0;
  double vx_min = -0.4, vx_max = 0.6;
  double pitch_max = 0.1;
  double height_min = 0.25, height_max = 0.29;
  double freq_min = 2.0, freq_max = 3.0;
  bool vary_gait = true;
  double joint_amplitude = 1.0;  // rad, fixed-base models
};

// Gait table: (b1, b2) for gait indices 0..3.
inline constexpr std::array<std::array<double, 2>, 4> kGaitOffsets{
    {{0.5, 0.5}, {0.5, 0.0}, {0.0, 0.5}, {0.0, 0.0}}};

inline void SetGait(CommandVector& c, int gait) {
  if (gait < 0 || gait > 3) throw InvalidArgument("gait index must be 0..3");
  c[CommandVector::kB1] = kGaitOffsets[static_cast<std::size_t>(gait)][0];
  c[CommandVector::kB2] = kGaitOffsets[static_cast<std::size_t>(gait)][1];
}

// Teleoperation-like random schedule: piecewise segments whose continuous
// channels ramp linearly from one random target to the next. Fixed-base
// models get sums of random sinusoids on their joint-target channels.
inline std::vector<CommandVector> RandomCommandSchedule(
    const ModelDescriptor& model, double duration, std::uint64_t seed,
    const ScheduleOptions& opt = {}, const CommandVector& base = {}) {
  const int ticks = HorizonSteps(duration, model.dt_control);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto uni = [&](double a, double b) { return a + (b - a) * u01(rng); };
  std::vector<CommandVector> out;
  out.reserve(static_cast<std::size_t>(ticks));
  if (!model.floating_base()) {
    std::array<double, 3> f{}, ph{}, a{};
    std::array<double, 3> f2{}, ph2{}, a2{};
    for (int i = 0; i < 3; ++i) {
      f[i] = uni(0.2, 1.2);
      ph[i] = uni(0.0, 2 * M_PI);
      a[i] = uni(0.3, 1.0) * opt.joint_amplitude;
      f2[i] = uni(0.2, 1.2);
      ph2[i] = uni(0.0, 2 * M_PI);
      a2[i] = uni(0.3, 1.0) * opt.joint_amplitude;
    }
    for (int k = 0; k < ticks; ++k) {
      const double t = k * model.dt_control;
      CommandVector c = base;
      double s1 = 0.0, s2 = 0.0;
      for (int i = 0; i < 3; ++i) {
        s1 += a[i] / 3.0 * std::sin(2 * M_PI * f[i] * t + ph[i]);
        s2 += a2[i] / 3.0 * std::sin(2 * M_PI * f2[i] * t + ph2[i]);
      }
      c[CommandVector::kVx] = s1;
      c[CommandVector::kPitch] = s2;
      out.push_back(c);
    }
    return out;
  }
  struct Target {
    double vx, pitch, h, f;
    int gait;
  };
  // The gait phase is f * t, so the frequency is drawn once per trajectory;
  // ramping it would make the phase race.
  const double freq = uni(opt.freq_min, opt.freq_max);
  auto draw = [&] {
    Target t;
    t.vx = uni(opt.vx_min, opt.vx_max);
    t.pitch = uni(-opt.pitch_max, opt.pitch_max);
    t.h = uni(opt.height_min, opt.height_max);
    t.f = freq;
    t.gait = opt.vary_gait ? static_cast<int>(u01(rng) * 4.0) % 4 : 0;
    return t;
  };
  Target from{0.0, 0.0, base[CommandVector::kHeight], freq, 0};
  int k = 0;
  while (k < ticks) {
    const Target to = draw();
    const int len = HorizonSteps(uni(opt.segment_min, opt.segment_max),
                                 model.dt_control);
    for (int i = 0; i < len && k < ticks; ++i, ++k) {
      // ramp over the first half, hold for the second
      const double w = std::min(1.0, 2.0 * (i + 1) / static_cast<double>(len));
      CommandVector c = base;
      c[CommandVector::kVx] = from.vx + w * (to.vx - from.vx);
      c[CommandVector::kPitch] = from.pitch + w * (to.pitch - from.pitch);
      c[CommandVector::kHeight] = from.h + w * (to.h - from.h);
      c[CommandVector::kFrequency] = from.f + w * (to.f - from.f);
      if (opt.vary_gait) SetGait(c, to.gait);
      out.push_back(c);
    }
    from = to;
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON Lines files: <stem>.jsonl plus <stem>.meta.json.

namespace detail {

inline nlohmann::json ToJson(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

inline Eigen::VectorXd VectorFromJson(const nlohmann::json& j,
                                      const std::string& key, long size,
                                      std::size_t line) {
  auto fail = [&](const std::string& why) {
    return InvalidArgument("record " + std::to_string(line) + ", field '" +
                           key + "': " + why);
  };
  if (!j.contains(key) || !j.at(key).is_array()) throw fail("missing array");
  const auto& a = j.at(key);
  if (size >= 0 && static_cast<long>(a.size()) != size)
    throw fail("expected " + std::to_string(size) + " entries");
  Eigen::VectorXd v(static_cast<long>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number()) throw fail("non-numeric entry");
    v(static_cast<long>(i)) = a[i].get<double>();
    if (!std::isfinite(v(static_cast<long>(i)))) throw fail("non-finite entry");
  }
  return v;
}

}  // namespace detail

inline nlohmann::json NoiseToJson(const NoiseSpec& n) {
  return {{"position", n.position},
          {"orientation", n.orientation},
          {"linear_velocity", n.linear_velocity},
          {"angular_velocity", n.angular_velocity},
          {"joint_position", n.joint_position},
          {"joint_velocity", n.joint_velocity},
          {"seed", n.seed}};
}

inline NoiseSpec NoiseFromJson(const nlohmann::json& j) {
  NoiseSpec n;
  n.position = j.value("position", 0.0);
  n.orientation = j.value("orientation", 0.0);
  n.linear_velocity = j.value("linear_velocity", 0.0);
  n.angular_velocity = j.value("angular_velocity", 0.0);
  n.joint_position = j.value("joint_position", 0.0);
  n.joint_velocity = j.value("joint_velocity", 0.0);
  n.seed = j.value("seed", std::uint64_t{0});
  n.Validate();
  return n;
}

inline void WriteTrajectory(const Trajectory& tr,
                            const std::filesystem::path& stem) {
  tr.Validate();
  if (stem.has_parent_path())
    std::filesystem::create_directories(stem.parent_path());
  std::ofstream out(stem.string() + ".jsonl");
  if (!out) throw ConfigurationError("cannot write " + stem.string());
  for (std::size_t k = 0; k < tr.states.size(); ++k) {
    const SimState& s = tr.states[k];
    nlohmann::json r = {{"t", s.t},
                        {"p", detail::ToJson(s.p)},
                        {"quat", detail::ToJson(s.quat)},
                        {"v", detail::ToJson(s.v)},
                        {"omega", detail::ToJson(s.omega)},
                        {"q", detail::ToJson(s.q_jnt)},
                        {"dq", detail::ToJson(s.dq_jnt)}};
    // the final state has no outgoing input
    if (k < tr.inputs.size()) {
      r["u"] = detail::ToJson(tr.inputs[k].q_target);
      r["tau"] = detail::ToJson(tr.tau_meas[k]);
    }
    out << r.dump(-1, ' ', false, nlohmann::json::error_handler_t::strict)
        << '\n';
  }
  nlohmann::json meta = {{"source_id", tr.meta.source_id},
                         {"model", tr.meta.model_name},
                         {"dt_control", tr.meta.dt_control},
                         {"seed", tr.meta.seed},
                         {"noise", NoiseToJson(tr.meta.noise)},
                         {"fall_time", tr.meta.fall_time},
                         {"records", tr.states.size()}};
  std::ofstream m(stem.string() + ".meta.json");
  m << meta.dump(2) << '\n';
}

inline Trajectory ReadTrajectory(const std::filesystem::path& stem) {
  Trajectory tr;
  const std::string meta_path = stem.string() + ".meta.json";
  std::ifstream m(meta_path);
  if (!m) throw ConfigurationError("missing metadata file " + meta_path);
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(m);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigurationError(meta_path + ": " + e.what());
  }
  tr.meta.source_id = meta.value("source_id", std::string{});
  tr.meta.model_name = meta.value("model", std::string{});
  tr.meta.dt_control = meta.value("dt_control", 0.02);
  tr.meta.seed = meta.value("seed", std::uint64_t{0});
  tr.meta.fall_time = meta.value("fall_time", -1.0);
  if (meta.contains("noise")) tr.meta.noise = NoiseFromJson(meta["noise"]);

  const std::string path = stem.string() + ".jsonl";
  std::ifstream in(path);
  if (!in) throw ConfigurationError("missing trajectory file " + path);
  std::string line;
  std::size_t no = 0;
  long nj = -1;
  bool ended = false;
  while (std::getline(in, line)) {
    ++no;
    if (line.empty()) continue;
    if (ended)
      throw InvalidArgument(path + ": record " + std::to_string(no - 1) +
                            " has no input but is not the last record");
    nlohmann::json r;
    try {
      r = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw InvalidArgument(path + ":" + std::to_string(no) + ": " + e.what());
    }
    SimState s;
    const Eigen::VectorXd t = [&] {
      if (!r.contains("t") || !r["t"].is_number())
        throw InvalidArgument(path + ":" + std::to_string(no) + ": missing t");
      return Eigen::VectorXd::Constant(1, r["t"].get<double>());
    }();
    if (!std::isfinite(t(0)))
      throw InvalidArgument(path + ":" + std::to_string(no) + ": non-finite t");
    s.t = t(0);
    s.p = detail::VectorFromJson(r, "p", 3, no);
    s.quat = detail::VectorFromJson(r, "quat", 4, no);
    s.v = detail::VectorFromJson(r, "v", 3, no);
    s.omega = detail::VectorFromJson(r, "omega", 3, no);
    s.q_jnt = detail::VectorFromJson(r, "q", nj, no);
    nj = s.q_jnt.size();
    s.dq_jnt = detail::VectorFromJson(r, "dq", nj, no);
    tr.states.push_back(std::move(s));
    if (r.contains("u")) {
      tr.inputs.push_back({detail::VectorFromJson(r, "u", nj, no)});
      tr.tau_meas.push_back(detail::VectorFromJson(r, "tau", nj, no));
    } else {
      ended = true;
    }
  }
  if (tr.states.size() < 2)
    throw InvalidArgument(path + ": trajectory needs at least two records");
  if (!ended)
    throw InvalidArgument(path + ": last record must omit u and tau");
  tr.Validate();
  return tr;
}

// All <stem>.jsonl files in a directory, sorted by name.
inline std::vector<TrajectoryPtr> ReadTrajectoryDir(
    const std::filesystem::path& dir, const std::string& prefix = "") {
  if (!std::filesystem::is_directory(dir))
    throw ConfigurationError("data directory not found: " + dir.string());
  std::vector<std::filesystem::path> stems;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const auto p = e.path();
    if (p.extension() != ".jsonl") continue;
    const std::string name = p.stem().string();
    if (!prefix.empty() && name.rfind(prefix, 0) != 0) continue;
    stems.push_back(p.parent_path() / p.stem());
  }
  std::sort(stems.begin(), stems.end());
  std::vector<TrajectoryPtr> out;
  for (const auto& s : stems)
    out.push_back(std::make_shared<const Trajectory>(ReadTrajectory(s)));
  if (out.empty())
    throw ConfigurationError("no trajectories in " + dir.string() +
                             (prefix.empty() ? "" : " with prefix " + prefix));
  return out;
}

}  // namespace sampid

#endif  // SAMPID_DATASET_HPP_
