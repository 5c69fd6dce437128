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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "sampid/controller.hpp"
#include "sampid/dataset.hpp"

namespace sampid {
namespace {

ParamVector Truth(const ModelDescriptor& m) {
  return MakeParams(m,
                    InertialParams::FromComFrame(
                        9.363, {0.004, -0.005, -0.020},
                        Eigen::Vector3d(0.391, 0.515, 0.396).asDiagonal()),
                    MotorModelKind::kGroupedTanh,
                    Eigen::Vector3d(22.553, 24.969, 23.523));
}

Trajectory Dummy(int steps) {
  Trajectory tr;
  for (int k = 0; k <= steps; ++k) {
    SimState s;
    s.t = 0.02 * k;
    s.q_jnt = Eigen::VectorXd::Constant(2, 0.1 * k);
    s.dq_jnt = Eigen::VectorXd::Zero(2);
    tr.states.push_back(s);
    if (k < steps) {
      tr.inputs.push_back({Eigen::VectorXd::Constant(2, 0.5)});
      tr.tau_meas.push_back(Eigen::VectorXd::Constant(2, -1.25));
    }
  }
  return tr;
}

std::filesystem::path TempDir(const std::string& name) {
  const auto d = std::filesystem::temp_directory_path() /
                 ("sampid_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(d);
  std::filesystem::create_directories(d);
  return d;
}

TEST(Synthetic, SixtySecondsGiveThreeThousandSteps) {
  const ModelDescriptor m = MakePlanarQuadruped();
  GaitController ctrl(m);
  const SyntheticData d =
      GenerateSynthetic(Truth(m), ctrl, {CommandVector{}}, 60.0, NoiseSpec{}, m,
                        DefaultInitialState(m), "s", /*stop_on_fall=*/false);
  EXPECT_EQ(d.logged.inputs.size(), 3000u);
  EXPECT_EQ(d.logged.states.size(), 3001u);
  EXPECT_EQ(d.truth.size(), 3001u);
  EXPECT_NO_THROW(d.logged.Validate());
}

TEST(Synthetic, NoiseMagnitudeMatchesFoldedNormal) {
  // E|N(0, s^2)| = s sqrt(2 / pi)
  const ModelDescriptor m = MakePlanarQuadruped();
  GaitController ctrl(m);
  NoiseSpec n;
  n.joint_position = 0.01;
  n.linear_velocity = 0.02;
  n.seed = 5;
  const SyntheticData d = GenerateSynthetic(Truth(m), ctrl, {CommandVector{}},
                                            20.0, n, m, DefaultInitialState(m));
  double q = 0.0, v = 0.0;
  long nq = 0, nv = 0;
  for (std::size_t k = 0; k < d.truth.size(); ++k) {
    const auto& o = d.logged.states[k];
    const auto& t = d.truth[k];
    q += (o.q_jnt - t.q_jnt).cwiseAbs().sum();
    nq += o.q_jnt.size();
    v += std::abs(o.v(0) - t.v(0)) + std::abs(o.v(2) - t.v(2));
    nv += 2;
    // untouched channels stay exact
    ASSERT_EQ(o.p, t.p);
    ASSERT_EQ(o.dq_jnt, t.dq_jnt);
    ASSERT_EQ(o.v(1), t.v(1));
  }
  const double k = std::sqrt(2.0 / M_PI);
  EXPECT_NEAR(q / nq, 0.01 * k, 0.1 * 0.01 * k);
  EXPECT_NEAR(v / nv, 0.02 * k, 0.1 * 0.02 * k);
}

TEST(Synthetic, InputsAndTorquesAreExact) {
  const ModelDescriptor m = MakePlanarQuadruped();
  GaitController ctrl(m);
  NoiseSpec n{0.001, 0.01, 0.01, 0.01, 0.001, 0.01, 3};
  const SyntheticData d = GenerateSynthetic(Truth(m), ctrl, {CommandVector{}},
                                            1.0, n, m, DefaultInitialState(m));
  SimState x = d.truth[0];
  for (std::size_t k = 0; k < d.logged.inputs.size(); ++k) {
    ASSERT_EQ(d.logged.inputs[k].q_target, ctrl.Act(d.truth[k], CommandVector{}).q_target);
    const StepResult r = StepWithTorque(x, d.logged.inputs[k], Truth(m), m);
    ASSERT_EQ(r.tau, d.logged.tau_meas[k]);
    x = r.state;
  }
}

TEST(Synthetic, StopsAtFall) {
  const ModelDescriptor m = MakePlanarQuadruped();
  GaitController ctrl(m);
  SimState x0 = DefaultInitialState(m);
  x0.quat = PitchQuat(1.2);  // already past the fall threshold after one tick
  const SyntheticData d =
      GenerateSynthetic(Truth(m), ctrl, {CommandVector{}}, 5.0, NoiseSpec{}, m, x0);
  EXPECT_GT(d.logged.meta.fall_time, 0.0);
  EXPECT_LT(d.logged.inputs.size(), 250u);
}

TEST(Segment, FixedHorizonGivesExactCount) {
  for (int h : {1, 5, 50}) {
    const Trajectory tr = Dummy(7 * h);
    const auto clips = Segment(tr, 0, h, h, 1);
    ASSERT_EQ(clips.size(), 7u);
    for (std::size_t i = 0; i < clips.size(); ++i) {
      EXPECT_EQ(clips[i].start, static_cast<int>(i) * h);
      EXPECT_EQ(clips[i].horizon, h);
    }
  }
}

TEST(Segment, TilesTrajectoryForAnySeed) {
  const Trajectory tr = Dummy(1013);
  const int h_min = 3, h_max = 40;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto clips = Segment(tr, 0, h_min, h_max, seed);
    int next = 0;
    for (std::size_t i = 0; i < clips.size(); ++i) {
      ASSERT_EQ(clips[i].start, next);
      ASSERT_GE(clips[i].horizon, h_min);
      if (i + 1 < clips.size()) ASSERT_LE(clips[i].horizon, h_max);
      else ASSERT_LT(clips[i].horizon, h_max + h_min);
      next += clips[i].horizon;
    }
    ASSERT_EQ(next, 1013);
  }
}

TEST(Segment, SameSeedSameClips) {
  const Trajectory tr = Dummy(500);
  const auto a = Segment(tr, 0, 2, 30, 9), b = Segment(tr, 0, 2, 30, 9);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].horizon, b[i].horizon);
}

TEST(Segment, InvalidBoundsAndShortTrajectory) {
  const Trajectory tr = Dummy(10);
  EXPECT_THROW(Segment(tr, 0, 0, 5, 1), ConfigurationError);
  EXPECT_THROW(Segment(tr, 0, 6, 5, 1), ConfigurationError);
  EXPECT_THROW(Segment(tr, 0, 11, 20, 1), InvalidArgument);
}

TEST(ClipSet, SplitHeadAndMerge) {
  auto tr = std::make_shared<const Trajectory>(Dummy(100));
  const ClipSet set = SegmentAll({tr, tr}, 10, 10, 1);
  ASSERT_EQ(set.size(), 20u);
  const auto [head, tail] = set.SplitHead(0.1);
  EXPECT_EQ(head.size(), 2u);
  EXPECT_EQ(tail.size(), 18u);
  EXPECT_EQ(set.SplitHead(0.001).first.size(), 1u);
  const ClipSet merged = head.Merge(tail);
  EXPECT_EQ(merged.size(), 20u);
  EXPECT_EQ(merged.trajectories.size(), 4u);
  EXPECT_EQ(merged.clips.back().trajectory, 3);
}

TEST(Schedule, LengthRangesAndDeterminism) {
  const ModelDescriptor m = MakePlanarQuadruped();
  ScheduleOptions opt;
  const auto a = RandomCommandSchedule(m, 30.0, 4, opt);
  const auto b = RandomCommandSchedule(m, 30.0, 4, opt);
  ASSERT_EQ(a.size(), 1500u);
  for (std::size_t k = 0; k < a.size(); ++k) {
    ASSERT_EQ(a[k].c, b[k].c);
    EXPECT_GE(a[k][CommandVector::kVx], opt.vx_min - 1e-12);
    EXPECT_LE(a[k][CommandVector::kVx], opt.vx_max + 1e-12);
    EXPECT_LE(std::abs(a[k][CommandVector::kPitch]), opt.pitch_max + 1e-12);
    EXPECT_NO_THROW(a[k].Validate());
  }
}

TEST(Schedule, FixedGaitKeepsBaseOffsets) {
  const ModelDescriptor m = MakePlanarQuadruped();
  ScheduleOptions opt;
  opt.vary_gait = false;
  CommandVector base;
  SetGait(base, 2);
  for (const auto& c : RandomCommandSchedule(m, 20.0, 1, opt, base)) {
    ASSERT_EQ(c[CommandVector::kB1], 0.0);
    ASSERT_EQ(c[CommandVector::kB2], 0.5);
  }
}

TEST(Schedule, GaitIndexOutOfRange) {
  CommandVector c;
  EXPECT_THROW(SetGait(c, 4), InvalidArgument);
}

TEST(JsonLines, RoundTripIsExact) {
  const auto dir = TempDir("rt");
  const ModelDescriptor m = MakePlanarQuadruped();
  GaitController ctrl(m);
  NoiseSpec n{0.001, 0.01, 0.01, 0.01, 0.001, 0.01, 2};
  const Trajectory tr = GenerateSynthetic(Truth(m), ctrl, {CommandVector{}}, 1.0,
                                          n, m, DefaultInitialState(m))
                            .logged;
  WriteTrajectory(tr, dir / "traj");
  const Trajectory back = ReadTrajectory(dir / "traj");
  ASSERT_EQ(back.states.size(), tr.states.size());
  for (std::size_t k = 0; k < tr.states.size(); ++k) {
    EXPECT_EQ(back.states[k].p, tr.states[k].p);
    EXPECT_EQ(back.states[k].quat, tr.states[k].quat);
    EXPECT_EQ(back.states[k].q_jnt, tr.states[k].q_jnt);
    EXPECT_EQ(back.states[k].t, tr.states[k].t);
  }
  for (std::size_t k = 0; k < tr.inputs.size(); ++k) {
    EXPECT_EQ(back.inputs[k].q_target, tr.inputs[k].q_target);
    EXPECT_EQ(back.tau_meas[k], tr.tau_meas[k]);
  }
  std::filesystem::remove_all(dir);
}

TEST(JsonLines, MalformedFilesAreRejected) {
  const auto dir = TempDir("bad");
  WriteTrajectory(Dummy(3), dir / "ok");
  {
    std::ofstream f(dir / "garbage.jsonl");
    f << "{\"t\": 0.0, \"p\": [0, 0\n";
  }
  std::filesystem::copy_file(dir / "ok.meta.json", dir / "garbage.meta.json");
  std::filesystem::copy_file(dir / "ok.meta.json", dir / "open.meta.json");
  EXPECT_THROW(ReadTrajectory(dir / "garbage"), InvalidArgument);
  {
    // every record carries an input: the final state is missing
    std::ifstream in(dir / "ok.jsonl");
    std::string first;
    std::getline(in, first);
    std::ofstream f(dir / "open.jsonl");
    f << first << '\n' << first << '\n';
  }
  EXPECT_THROW(ReadTrajectory(dir / "open"), InvalidArgument);
  EXPECT_THROW(ReadTrajectory(dir / "missing"), ConfigurationError);
  EXPECT_EQ(ReadTrajectoryDir(dir, "ok").size(), 1u);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace sampid
