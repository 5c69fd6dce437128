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

#include "sampid/excitation.hpp"

namespace sampid {
namespace {

// x+ = theta x + u, theta = 0.9, one free coordinate of width 1.
struct Scalar {
  ModelDescriptor model = MakeLinearDebug();
  ParamVector theta = MakeParams(
      model,
      InertialParams::FromComFrame(1.0, Eigen::Vector3d::Zero(),
                                   Eigen::Matrix3d::Identity()),
      MotorModelKind::kLinearGain, Eigen::VectorXd::Constant(1, 0.9));
  SearchSpace space = MakeSearchSpace(PhysicalBounds{}, theta, {"kappa_s"});
  std::shared_ptr<const Controller> ctrl = MakeController(model);
};

ParamVector QuadrupedTheta(const ModelDescriptor& m) {
  return MakeParams(m,
                    InertialParams::FromComFrame(
                        9.363, {0.004, -0.005, -0.020},
                        Eigen::Vector3d(0.391, 0.515, 0.396).asDiagonal()),
                    MotorModelKind::kGroupedTanh,
                    Eigen::Vector3d(22.553, 24.969, 23.523));
}

std::vector<CommandVector> Constant(double vx, int ticks) {
  CommandVector c;
  c[CommandVector::kVx] = vx;
  return std::vector<CommandVector>(static_cast<std::size_t>(ticks), c);
}

FimEstimate Fim(double value) {
  FimEstimate f;
  f.matrix = Eigen::MatrixXd::Constant(1, 1, value);
  f.t_total = f.t_survived = 1.0;
  return f;
}

TEST(Sensitivity, LinearSystemDerivativeIsState) {
  Scalar s;
  SimState x = DefaultInitialState(s.model);
  for (double x0 : {1.0, -2.5, 0.3}) {
    x.q_jnt(0) = x0;
    const Eigen::MatrixXd d = FdSensitivityFlat(
        x, ControlInput{Eigen::VectorXd::Constant(1, 0.7)}, s.theta, {10},
        Eigen::VectorXd::Constant(1, 1e-5), s.model);
    EXPECT_NEAR(d(12, 0), x0, 1e-8);
    EXPECT_NEAR(d.norm(), std::abs(x0), 1e-8);
  }
}

TEST(Sensitivity, GainOfIdleJointHasZeroColumn) {
  // Hanging pendulum with targets at rest: tau_pd stays exactly zero, so the
  // saturation gains cannot affect the next state.
  const ModelDescriptor m = MakeDoublePendulum();
  const ParamVector theta = MakeParams(
      m,
      InertialParams::FromComFrame(0.8, {0.0, 0.0, -0.2},
                                   Eigen::Vector3d(0.004, 0.004, 0.001).asDiagonal()),
      MotorModelKind::kGroupedTanh, Eigen::Vector2d(5.0, 7.0));
  const SimState x = DefaultInitialState(m);
  const Eigen::MatrixXd d = FdSensitivityFlat(
      x, ControlInput{Eigen::Vector2d::Zero()}, theta, {10, 11},
      Eigen::Vector2d(1e-3, 1e-3), m);
  EXPECT_EQ(d.norm(), 0.0);
}

TEST(Sensitivity, PendulumMassColumnMatchesRichardson) {
  const ModelDescriptor m = MakeDoublePendulum();
  const ParamVector theta = MakeParams(
      m,
      InertialParams::FromComFrame(0.8, {0.02, 0.0, -0.2},
                                   Eigen::Vector3d(0.004, 0.004, 0.001).asDiagonal()),
      MotorModelKind::kIdeal, Eigen::VectorXd());
  SimState x = DefaultInitialState(m);
  x.q_jnt << 0.7, -0.4;
  x.dq_jnt << 0.5, 1.1;
  const ControlInput u{Eigen::Vector2d(0.2, 0.3)};
  auto col = [&](double h) {
    return Eigen::VectorXd(FdSensitivityFlat(x, u, theta, {LogCholeskyVector::kAlpha},
                                             Eigen::VectorXd::Constant(1, h), m)
                               .col(0));
  };
  // fourth-order reference from two coarser central differences
  const Eigen::VectorXd ref = (4.0 * col(5e-3) - col(1e-2)) / 3.0;
  const Eigen::VectorXd fd = col(1e-4);
  EXPECT_LT((fd - ref).norm(), 1e-4 * ref.norm());
}

TEST(Sensitivity, DivergentStepReportsParameter) {
  const ModelDescriptor m = MakePlanarQuadruped();
  SimState x = DefaultInitialState(m);
  x.v(0) = std::nan("");
  EXPECT_THROW(FdSensitivityFlat(x, ControlInput{x.q_jnt}, QuadrupedTheta(m), {0},
                                 Eigen::VectorXd::Constant(1, 1e-4), m),
               SensitivityFailed);
}

TEST(Fim, ScalarSystemClosedForm) {
  Scalar s;
  std::vector<CommandVector> cmds;
  std::vector<double> u;
  for (int k = 0; k < 40; ++k) {
    CommandVector c;
    u.push_back(std::sin(0.3 * k));
    c[CommandVector::kVx] = u.back();
    cmds.push_back(c);
  }
  FimOptions opt;
  opt.sigma = 0.5;
  opt.eps = 1e-5;
  const FimEstimate f =
      FimAccumulate(DefaultInitialState(s.model), cmds, s.theta, *s.ctrl, s.model,
                    s.space, opt);
  double x = 1.0, sum = 0.0;
  for (double uk : u) {
    sum += x * x;
    x = 0.9 * x + uk;
  }
  EXPECT_NEAR(f.matrix(0, 0), sum / 0.25, 1e-8 * sum / 0.25);
  EXPECT_EQ(f.samples, 40);
}

TEST(Fim, EmptyPlanGivesZeroMatrix) {
  Scalar s;
  const FimEstimate f = FimAccumulate(DefaultInitialState(s.model), {}, s.theta,
                                      *s.ctrl, s.model, s.space);
  EXPECT_EQ(f.matrix.rows(), 1);
  EXPECT_EQ(f.matrix(0, 0), 0.0);
}

class QuadrupedFim : public ::testing::Test {
 protected:
  ModelDescriptor m = MakePlanarQuadruped();
  ParamVector theta = QuadrupedTheta(m);
  SearchSpace space =
      MakeSearchSpace(PhysicalBounds{}, theta, {"alpha", "d1", "t1", "t3", "kappa"});
  GaitController ctrl{m};
  FimEstimate Run(const std::vector<CommandVector>& cmds, double sigma = 1.0) {
    FimOptions opt;
    opt.sigma = sigma;
    return FimAccumulate(DefaultInitialState(m), cmds, theta, ctrl, m, space, opt);
  }
};

TEST_F(QuadrupedFim, SymmetricPositiveSemidefinite) {
  const FimEstimate f = Run(Constant(0.4, 60));
  EXPECT_EQ(f.matrix, f.matrix.transpose());
  const Eigen::VectorXd ev =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(f.matrix).eigenvalues();
  EXPECT_GE(ev.minCoeff(), -1e-9 * ev.maxCoeff());
}

TEST_F(QuadrupedFim, InformationOnlyGrowsWithTicks) {
  const FimEstimate a = Run(Constant(0.4, 30));
  const FimEstimate b = Run(Constant(0.4, 60));
  const Eigen::VectorXd ev =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(b.matrix - a.matrix).eigenvalues();
  EXPECT_GE(ev.minCoeff(), -1e-9 * b.matrix.norm());
}

TEST_F(QuadrupedFim, SigmaScaling) {
  const FimEstimate a = Run(Constant(0.2, 20), 1.0);
  const FimEstimate b = Run(Constant(0.2, 20), 2.0);
  EXPECT_LT((4.0 * b.matrix - a.matrix).norm(), 1e-12 * a.matrix.norm());
  // the relative regularizer scales with F, so the objective scales by sigma^2
  EXPECT_NEAR(ExcitationObjective(b, 1e-6, 0.0),
              4.0 * ExcitationObjective(a, 1e-6, 0.0),
              1e-9 * ExcitationObjective(b, 1e-6, 0.0));
}

TEST_F(QuadrupedFim, MovingCarriesMoreInformationThanStanding) {
  const FimEstimate still = Run(Constant(0.0, 100));
  const FimEstimate moving = Run(Constant(0.6, 100));
  EXPECT_GT(moving.matrix.trace(), still.matrix.trace());
}

TEST(Objective, IdentityGivesDimension) {
  FimEstimate f;
  f.matrix = Eigen::MatrixXd::Identity(4, 4);
  f.t_total = f.t_survived = 2.0;
  EXPECT_NEAR(ExcitationObjective(f, 1e-6, 100.0), 4.0, 1e-5);
}

TEST(Objective, DiagonalExample) {
  FimEstimate f;
  f.matrix = Eigen::Vector2d(1.0, 4.0).asDiagonal();
  f.t_total = f.t_survived = 1.0;
  EXPECT_NEAR(ExcitationObjective(f, 1e-9, 0.0), 1.25, 1e-8);
}

TEST(Objective, FallPenaltyIsProportional) {
  FimEstimate f = Fim(2.0);
  f.t_total = 10.0;
  f.t_survived = 5.0;
  const double base = TraceInverse(f.matrix, RelativeRegularizer(f.matrix, 1e-6));
  EXPECT_NEAR(ExcitationObjective(f, 1e-6, 40.0) - base, 20.0, 1e-12);
}

TEST(Objective, TraceInverseDecreasesWithRegularizer) {
  Eigen::MatrixXd f(3, 3);
  f << 2, 1, 0, 1, 3, 0.5, 0, 0.5, 0.1;  // singular, PSD
  double prev = std::numeric_limits<double>::infinity();
  for (double reg : {1e-8, 1e-6, 1e-4, 1e-2, 1.0}) {
    const double t = TraceInverse(f, reg);
    EXPECT_LT(t, prev);
    prev = t;
  }
  EXPECT_THROW(ExcitationObjective(Fim(1.0), 0.0, 0.0), InvalidArgument);
}

TEST(PlanSearch, ScalarOptimumMatchesGrid) {
  // One segment, three control points on v_x in [-1, 1]; brute-force an
  // 11-level grid as the reference.
  Scalar s;
  ExcitationConfig cfg;
  cfg.channel_lower = Eigen::VectorXd::Constant(1, -1.0);
  cfg.channel_upper = Eigen::VectorXd::Constant(1, 1.0);
  cfg.optimize_gaits = false;
  cfg.penalty = 1.0;
  const BezierCommandPlan tmpl =
      ConstantPlan({CommandVector::kVx}, Eigen::VectorXd::Zero(1), 1, 1.0, 2);
  const SimState x0 = DefaultInitialState(s.model);
  double grid = std::numeric_limits<double>::infinity();
  for (int a = 0; a <= 10; ++a)
    for (int b = 0; b <= 10; ++b)
      for (int c = 0; c <= 10; ++c) {
        BezierCommandPlan p = tmpl;
        p.segments[0].points << -1 + 0.2 * a, -1 + 0.2 * b, -1 + 0.2 * c;
        grid = std::min(grid, EvaluatePlan(p, x0, s.theta, *s.ctrl, s.model,
                                           s.space, cfg, 1.0)
                                  .objective);
      }
  CmaesConfig cc;
  cc.population = 8;
  cc.iterations = 40;
  const PlanOptimizationResult r =
      OptimizePlan(s.theta, *s.ctrl, s.model, s.space, cc, tmpl, cfg, x0);
  EXPECT_LE(r.evaluation.objective, 1.05 * grid);
}

TEST(PlanSearch, OptimizedPlanBeatsRandomPlans) {
  const ModelDescriptor m = MakePlanarQuadruped();
  const ParamVector theta = QuadrupedTheta(m);
  const SearchSpace space =
      MakeSearchSpace(PhysicalBounds{}, theta, {"alpha", "d1", "t1", "t3", "kappa"});
  GaitController ctrl(m);
  ExcitationConfig cfg;
  cfg.channel_lower = Eigen::Vector2d(-0.5, -0.15);
  cfg.channel_upper = Eigen::Vector2d(0.8, 0.15);
  const BezierCommandPlan tmpl = ConstantPlan(
      {CommandVector::kVx, CommandVector::kPitch}, Eigen::Vector2d(0.15, 0.0), 1, 2.0, 3);
  const SimState x0 = DefaultInitialState(m);
  CmaesConfig cc;
  cc.population = 8;
  cc.iterations = 6;
  const PlanOptimizationResult r =
      OptimizePlan(theta, ctrl, m, space, cc, tmpl, cfg, x0);
  std::mt19937_64 rng(11);
  for (int i = 0; i < 20; ++i) {
    const BezierCommandPlan p = RandomPlan(tmpl, cfg, rng);
    const double v =
        EvaluatePlan(p, x0, theta, ctrl, m, space, cfg, r.penalty).objective;
    EXPECT_LT(r.evaluation.objective, v) << "random plan " << i;
  }
  for (std::size_t i = 1; i < r.history.size(); ++i)
    EXPECT_LE(r.history[i], r.history[i - 1]);
}

TEST(PlanSearch, TemplateWithoutVariablesIsReturnedUnchanged) {
  Scalar s;
  ExcitationConfig cfg;
  cfg.channel_lower = Eigen::VectorXd(0);
  cfg.channel_upper = Eigen::VectorXd(0);
  const BezierCommandPlan tmpl = ConstantPlan({}, Eigen::VectorXd(0), 2, 1.0, 3, 1);
  const PlanOptimizationResult r = OptimizePlan(
      s.theta, *s.ctrl, s.model, s.space, CmaesConfig{}, tmpl, cfg,
      DefaultInitialState(s.model));
  EXPECT_EQ(r.plan.segments.size(), 2u);
  EXPECT_EQ(r.plan.segments[1].gait, 1);
  EXPECT_EQ(r.plan.VariableCount(), 0);
}

TEST(PlanSearch, BoundsMustCoverChannels) {
  Scalar s;
  ExcitationConfig cfg;
  const BezierCommandPlan tmpl =
      ConstantPlan({CommandVector::kVx}, Eigen::VectorXd::Zero(1), 1, 1.0, 2);
  EXPECT_THROW(OptimizePlan(s.theta, *s.ctrl, s.model, s.space, CmaesConfig{},
                            tmpl, cfg, DefaultInitialState(s.model)),
               ConfigurationError);
}

TEST(StateDifference, QuaternionSignInvariant) {
  SimState a, b;
  a.q_jnt = b.q_jnt = a.dq_jnt = b.dq_jnt = Eigen::VectorXd::Zero(2);
  a.quat = PitchQuat(0.2);
  b.quat = PitchQuat(0.5);
  const Eigen::VectorXd d1 = StateDifference(a, b);
  b.quat = -b.quat;
  const Eigen::VectorXd d2 = StateDifference(a, b);
  EXPECT_LT((d1 - d2).norm(), 1e-14);
  EXPECT_NEAR(d1(4), 0.3, 1e-14);
}

}  // namespace
}  // namespace sampid
