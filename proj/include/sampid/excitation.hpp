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

// Active exploration: finite-difference sensitivities of the one-step map,
// Fisher information along a closed-loop rollout, and a search over command
// plans that minimizes tr(F^-1) (A-optimal design).
//
// Sensitivities are taken with respect to the normalized search coordinates,
// so F is dimensionless in the parameters and one step size fits all.

#ifndef SAMPID_EXCITATION_HPP_
#define SAMPID_EXCITATION_HPP_

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "sampid/bezier.hpp"
#include "sampid/cmaes.hpp"
#include "sampid/controller.hpp"
#include "sampid/dataset.hpp"
#include "sampid/dynamics.hpp"
#include "sampid/errors.hpp"
#include "sampid/parallel.hpp"
#include "sampid/params.hpp"

namespace sampid {

// Tangent-space difference b - a: position, rotation vector of a^-1 b,
// velocities, joints. Length 12 + 2 n_joints.
inline Eigen::VectorXd StateDifference(const SimState& a, const SimState& b) {
  const long nj = a.q_jnt.size();
  Eigen::VectorXd d(12 + 2 * nj);
  d.segment<3>(0) = b.p - a.p;
  d.segment<3>(3) = QuatLogDifference(a.quat, b.quat);
  d.segment<3>(6) = b.v - a.v;
  d.segment<3>(9) = b.omega - a.omega;
  d.segment(12, nj) = b.q_jnt - a.q_jnt;
  d.segment(12 + nj, nj) = b.dq_jnt - a.dq_jnt;
  return d;
}

// Central differences of f(x, u; theta) with respect to flat parameter
// coordinates `index`, step eps[i] in the same units.
inline Eigen::MatrixXd FdSensitivityFlat(const SimState& x,
                                         const ControlInput& u,
                                         const ParamVector& theta,
                                         const std::vector<int>& index,
                                         const Eigen::VectorXd& eps,
                                         const ModelDescriptor& model) {
  if (eps.size() != static_cast<long>(index.size()))
    throw InvalidArgument("one finite-difference step per parameter");
  const Eigen::VectorXd flat = theta.Flat();
  Eigen::MatrixXd s(12 + 2 * x.q_jnt.size(), static_cast<long>(index.size()));
  for (std::size_t k = 0; k < index.size(); ++k) {
    const double h = eps(static_cast<long>(k));
    if (!(h > 0.0)) throw InvalidArgument("finite-difference step must be > 0");
    Eigen::VectorXd fp = flat, fm = flat;
    fp(index[k]) += h;
    fm(index[k]) -= h;
    SimState xp, xm;
    try {
      xp = Step(x, u, ParamVector::FromFlat(fp, theta.motor), model);
      xm = Step(x, u, ParamVector::FromFlat(fm, theta.motor), model);
    } catch (const NumericalError& e) {
      throw SensitivityFailed(k, e.what());
    }
    s.col(static_cast<long>(k)) = StateDifference(xm, xp) / (2.0 * h);
  }
  return s;
}

// Same in normalized coordinates of `space`: column k is the derivative with
// respect to the k-th free coordinate mapped to [0, 1].
inline Eigen::MatrixXd FdSensitivity(const SimState& x, const ControlInput& u,
                                     const ParamVector& theta,
                                     const SearchSpace& space, double eps,
                                     const ModelDescriptor& model) {
  const Eigen::VectorXd width = space.Width();
  Eigen::MatrixXd s = FdSensitivityFlat(x, u, theta, space.free(),
                                        eps * width, model);
  for (long k = 0; k < s.cols(); ++k) s.col(k) *= width(k);
  return s;
}

struct FimOptions {
  double sigma = 1.0;  // process noise scale
  double eps = 1e-4;   // step in normalized coordinates
  int seeds = 1;       // rollouts averaged; seed 0 is noise-free
  NoiseSpec process_noise;  // per-tick state noise for seeds > 0
  bool stop_on_fall = true;
};

struct FimEstimate {
  Eigen::MatrixXd matrix;
  double sigma = 1.0;
  long samples = 0;
  bool terminated = false;  // a rollout fell before the plan ended
  double t_survived = 0.0;  // mean over rollouts
  double t_total = 0.0;
};

// Closed-loop rollout of the plan under theta_hat, accumulating
// S^T S / sigma^2 per tick where S is the one-step sensitivity.
inline FimEstimate FimAccumulate(const SimState& x0,
                                 const std::vector<CommandVector>& commands,
                                 const ParamVector& theta_hat,
                                 const Controller& controller,
                                 const ModelDescriptor& model,
                                 const SearchSpace& space,
                                 const FimOptions& opt = {}) {
  if (!(opt.sigma > 0.0)) throw ConfigurationError("FIM sigma must be > 0");
  if (opt.seeds < 1) throw ConfigurationError("FIM needs at least one seed");
  const int d = space.Dim();
  FimEstimate est;
  est.sigma = opt.sigma;
  est.matrix = Eigen::MatrixXd::Zero(d, d);
  est.t_total = commands.size() * model.dt_control;
  const double inv_var = 1.0 / (opt.sigma * opt.sigma);
  double survived = 0.0;
  for (int seed = 0; seed < opt.seeds; ++seed) {
    std::mt19937_64 rng(opt.process_noise.seed + 104729ULL * seed);
    SimState x = x0;
    double alive = est.t_total;
    for (std::size_t k = 0; k < commands.size(); ++k) {
      const ControlInput u = controller.Act(x, commands[k]);
      const Eigen::MatrixXd s = FdSensitivity(x, u, theta_hat, space, opt.eps, model);
      est.matrix.noalias() += inv_var * (s.transpose() * s);
      ++est.samples;
      try {
        x = Step(x, u, theta_hat, model);
      } catch (const NumericalError&) {
        alive = (k + 1) * model.dt_control;
        est.terminated = true;
        break;
      }
      if (seed > 0) x = Observe(x, opt.process_noise, model, rng);
      if (opt.stop_on_fall && HasFallen(x, model)) {
        alive = (k + 1) * model.dt_control;
        est.terminated = true;
        break;
      }
    }
    survived += alive;
  }
  est.matrix /= opt.seeds;
  est.matrix = 0.5 * (est.matrix + est.matrix.transpose());
  est.t_survived = survived / opt.seeds;
  return est;
}

// tr((F + reg I)^-1) with an absolute regularizer.
inline double TraceInverse(const Eigen::MatrixXd& f, double reg) {
  const Eigen::MatrixXd a =
      f + reg * Eigen::MatrixXd::Identity(f.rows(), f.cols());
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 0.0).all())
    return std::numeric_limits<double>::infinity();
  return ldlt.solve(Eigen::MatrixXd::Identity(f.rows(), f.cols())).trace();
}

// Regularizer relative to the mean diagonal of F (falls back to reg itself
// for an all-zero F), so rescaling F rescales the regularizer with it.
inline double RelativeRegularizer(const Eigen::MatrixXd& f, double reg) {
  const double md = f.rows() ? f.diagonal().mean() : 0.0;
  return md > 0.0 ? reg * md : reg;
}

// tr((F + reg I)^-1) + P (1 - t_survived / t_total).
inline double ExcitationObjective(const FimEstimate& f, double reg,
                                  double penalty) {
  if (!(reg > 0.0)) throw InvalidArgument("excitation regularizer must be > 0");
  const double tr = TraceInverse(f.matrix, RelativeRegularizer(f.matrix, reg));
  const double frac = f.t_total > 0.0 ? f.t_survived / f.t_total : 1.0;
  return tr + penalty * (1.0 - frac);
}

struct ExcitationConfig {
  double reg = 1e-6;
  double penalty = 0.0;         // <= 0: penalty_factor x template trace term
  double penalty_factor = 10.0;
  Eigen::VectorXd channel_lower, channel_upper;  // per plan channel
  CommandVector fixed;          // non-optimized command channels
  FimOptions fim;
  int gait_passes = 1;
  bool optimize_gaits = true;
};

struct PlanEvaluation {
  FimEstimate fim;
  double objective = 0.0;
};

inline PlanEvaluation EvaluatePlan(const BezierCommandPlan& plan,
                                   const SimState& x0,
                                   const ParamVector& theta_hat,
                                   const Controller& controller,
                                   const ModelDescriptor& model,
                                   const SearchSpace& space,
                                   const ExcitationConfig& cfg,
                                   double penalty) {
  PlanEvaluation ev;
  ev.fim = FimAccumulate(x0, PlanToCommands(plan, model.dt_control, cfg.fixed),
                         theta_hat, controller, model, space, cfg.fim);
  ev.objective = ExcitationObjective(ev.fim, cfg.reg, penalty);
  return ev;
}

// Uniform control points inside the channel bounds and uniform gaits.
inline BezierCommandPlan RandomPlan(const BezierCommandPlan& tmpl,
                                    const ExcitationConfig& cfg,
                                    std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  BezierCommandPlan p = tmpl;
  for (auto& seg : p.segments) {
    for (long r = 0; r < seg.points.rows(); ++r)
      for (long c = 0; c < seg.points.cols(); ++c)
        seg.points(r, c) = cfg.channel_lower(r) +
                           u01(rng) * (cfg.channel_upper(r) - cfg.channel_lower(r));
    if (cfg.optimize_gaits) seg.gait = static_cast<int>(u01(rng) * 4.0) % 4;
  }
  return p;
}

struct PlanOptimizationResult {
  BezierCommandPlan plan;
  PlanEvaluation evaluation;
  double penalty = 0.0;
  std::vector<double> history;  // best objective after each phase
  long evaluations = 0;
};

// Continuous control points by CMA-ES, gaits by per-segment exhaustive sweep
// around it.
inline PlanOptimizationResult OptimizePlan(const ParamVector& theta_hat,
                                           const Controller& controller,
                                           const ModelDescriptor& model,
                                           const SearchSpace& space,
                                           const CmaesConfig& cmaes,
                                           const BezierCommandPlan& tmpl,
                                           const ExcitationConfig& cfg,
                                           const SimState& x0) {
  tmpl.Validate();
  const long nch = static_cast<long>(tmpl.channels.size());
  if (cfg.channel_lower.size() != nch || cfg.channel_upper.size() != nch)
    throw ConfigurationError("excitation needs bounds for every plan channel");
  if (((cfg.channel_upper - cfg.channel_lower).array() <= 0.0).any())
    throw ConfigurationError("excitation channel bounds need min < max");

  PlanOptimizationResult res;
  res.plan = tmpl;
  auto evaluate = [&](const BezierCommandPlan& p, double pen) {
    return EvaluatePlan(p, x0, theta_hat, controller, model, space, cfg, pen);
  };
  {
    const PlanEvaluation t = evaluate(tmpl, 0.0);
    res.penalty = cfg.penalty > 0.0
                      ? cfg.penalty
                      : cfg.penalty_factor *
                            (std::isfinite(t.objective) ? t.objective : 1.0);
  }
  res.evaluation = evaluate(tmpl, res.penalty);
  res.evaluations = 2;
  if (tmpl.VariableCount() == 0 || tmpl.segments.empty()) return res;

  const long nv = tmpl.VariableCount();
  const long per_seg = nv / static_cast<long>(tmpl.segments.size());
  auto lower_of = [&](long i) { return cfg.channel_lower((i % per_seg) / (per_seg / nch)); };
  auto upper_of = [&](long i) { return cfg.channel_upper((i % per_seg) / (per_seg / nch)); };
  auto decode = [&](const Eigen::VectorXd& z, BezierCommandPlan p) {
    Eigen::VectorXd v(nv);
    for (long i = 0; i < nv; ++i) v(i) = lower_of(i) + z(i) * (upper_of(i) - lower_of(i));
    p.Unflatten(v);
    return p;
  };
  auto encode = [&](const BezierCommandPlan& p) {
    const Eigen::VectorXd v = p.Flatten();
    Eigen::VectorXd z(nv);
    for (long i = 0; i < nv; ++i)
      z(i) = std::clamp((v(i) - lower_of(i)) / (upper_of(i) - lower_of(i)), 0.0, 1.0);
    return z;
  };
  auto sweep_gaits = [&]() {
    if (!cfg.optimize_gaits) return;
    for (std::size_t s = 0; s < res.plan.segments.size(); ++s) {
      std::vector<BezierCommandPlan> cand(4, res.plan);
      std::vector<PlanEvaluation> ev(4);
      for (int g = 0; g < 4; ++g) cand[static_cast<std::size_t>(g)].segments[s].gait = g;
      ParallelFor(
          4, [&](std::size_t g) { ev[g] = evaluate(cand[g], res.penalty); },
          cmaes.threads);
      res.evaluations += 4;
      for (int g = 0; g < 4; ++g)
        if (ev[static_cast<std::size_t>(g)].objective < res.evaluation.objective) {
          res.evaluation = ev[static_cast<std::size_t>(g)];
          res.plan = cand[static_cast<std::size_t>(g)];
        }
    }
    res.history.push_back(res.evaluation.objective);
  };

  for (int pass = 0; pass < std::max(1, cfg.gait_passes); ++pass) {
    sweep_gaits();
    const BezierCommandPlan base = res.plan;
    CmaesConfig cc = cmaes;
    cc.lower = Eigen::VectorXd::Zero(nv);
    cc.upper = Eigen::VectorXd::Ones(nv);
    cc.seed = cmaes.seed + 31ULL * pass;
    const OptResult o = CmaesMinimize(
        [&](const Eigen::VectorXd& z) {
          return evaluate(decode(z, base), res.penalty).objective;
        },
        encode(base), cc);
    res.evaluations += o.evaluations;
    if (o.best_value < res.evaluation.objective) {
      res.plan = decode(o.best, base);
      res.evaluation = evaluate(res.plan, res.penalty);
      ++res.evaluations;
    }
    res.history.push_back(res.evaluation.objective);
  }
  sweep_gaits();
  if (res.evaluation.fim.t_survived <= model.dt_control)
    throw ExcitationFailed(
        "every candidate plan fell immediately; widen the channel bounds or "
        "lower the command ranges");
  return res;
}

}  // namespace sampid

#endif  // SAMPID_EXCITATION_HPP_
