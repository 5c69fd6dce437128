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

// (mu/mu_w, lambda)-CMA-ES with box bounds.
//
// Each generation samples all candidates first, evaluates them as one batch
// (possibly in parallel) and updates from the results in candidate order, so
// a run depends only on the seed. Samples leaving the box are reflected back
// in; the update uses the reflected points.

#ifndef SAMPID_CMAES_HPP_
#define SAMPID_CMAES_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "sampid/errors.hpp"
#include "sampid/parallel.hpp"

namespace sampid {

struct CmaesConfig {
  int population = 0;  // 0: 4 + floor(3 ln d)
  double sigma0 = 0.3;  // fraction of the box width
  int iterations = 100;  // generations
  Eigen::VectorXd lower, upper;  // empty: unit box
  std::uint64_t seed = 1;
  int threads = 1;
  double tol_x = 1e-12;  // stop once sigma * max axis falls below this

  int Population(int dim) const {
    return population > 0
               ? population
               : 4 + static_cast<int>(std::floor(3.0 * std::log(dim)));
  }
};

struct CmaesGeneration {
  int generation = 0;
  double best_so_far = 0.0;
  double mean = 0.0;  // mean objective over the generation's finite values
  double sigma = 0.0;
};

struct OptResult {
  Eigen::VectorXd best;
  double best_value = std::numeric_limits<double>::infinity();
  std::vector<CmaesGeneration> history;
  long evaluations = 0;
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

// Reflects x into [lo, hi] (mirror at the walls, periodic in 2 * width).
inline double ReflectIntoBox(double x, double lo, double hi) {
  const double w = hi - lo;
  double y = std::fmod(x - lo, 2.0 * w);
  if (y < 0.0) y += 2.0 * w;
  if (y > w) y = 2.0 * w - y;
  return lo + y;
}

inline OptResult CmaesMinimize(const Objective& f, const Eigen::VectorXd& x0,
                               const CmaesConfig& cfg) {
  const int n = static_cast<int>(x0.size());
  if (n < 1) throw ConfigurationError("CMA-ES needs at least one dimension");
  Eigen::VectorXd lo = cfg.lower.size() ? cfg.lower : Eigen::VectorXd::Zero(n);
  Eigen::VectorXd hi = cfg.upper.size() ? cfg.upper : Eigen::VectorXd::Ones(n);
  if (lo.size() != n || hi.size() != n)
    throw ConfigurationError("CMA-ES bounds do not match the start point");
  if (((hi - lo).array() <= 0.0).any())
    throw ConfigurationError("CMA-ES bounds need min < max per dimension");
  if (((x0 - lo).array() < 0.0).any() || ((hi - x0).array() < 0.0).any())
    throw ConfigurationError("CMA-ES start point lies outside the bounds");
  const int lambda = cfg.Population(n);
  if (lambda < 4) throw ConfigurationError("CMA-ES population must be >= 4");
  if (!(cfg.sigma0 > 0.0)) throw ConfigurationError("sigma0 must be positive");

  // Work in coordinates scaled to the unit box so sigma0 is dimensionless.
  const Eigen::VectorXd width = hi - lo;
  auto to_world = [&](const Eigen::VectorXd& z) {
    return (lo.array() + z.array() * width.array()).matrix();
  };

  const int mu = lambda / 2;
  Eigen::VectorXd w(mu);
  for (int i = 0; i < mu; ++i) w(i) = std::log(mu + 0.5) - std::log(i + 1.0);
  w /= w.sum();
  const double mueff = 1.0 / w.squaredNorm();
  const double cs = (mueff + 2.0) / (n + mueff + 5.0);
  const double ds =
      1.0 + 2.0 * std::max(0.0, std::sqrt((mueff - 1.0) / (n + 1.0)) - 1.0) + cs;
  const double cc = (4.0 + mueff / n) / (n + 4.0 + 2.0 * mueff / n);
  const double c1 = 2.0 / ((n + 1.3) * (n + 1.3) + mueff);
  const double cmu = std::min(
      1.0 - c1, 2.0 * (mueff - 2.0 + 1.0 / mueff) / ((n + 2.0) * (n + 2.0) + mueff));
  const double chin =
      std::sqrt(static_cast<double>(n)) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));

  Eigen::VectorXd mean = ((x0 - lo).array() / width.array()).matrix();
  double sigma = cfg.sigma0;
  Eigen::MatrixXd c = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd b = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd d = Eigen::VectorXd::Ones(n);
  Eigen::VectorXd ps = Eigen::VectorXd::Zero(n), pc = Eigen::VectorXd::Zero(n);

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  OptResult res;
  res.best = x0;

  for (int gen = 0; gen < cfg.iterations; ++gen) {
    std::vector<Eigen::VectorXd> zs(static_cast<std::size_t>(lambda));
    for (auto& z : zs) {
      Eigen::VectorXd g(n);
      for (int i = 0; i < n; ++i) g(i) = gauss(rng);
      z = mean + sigma * (b * d.asDiagonal() * g);
      for (int i = 0; i < n; ++i) z(i) = ReflectIntoBox(z(i), 0.0, 1.0);
    }
    std::vector<double> fv(static_cast<std::size_t>(lambda));
    ParallelFor(
        zs.size(), [&](std::size_t k) { fv[k] = f(to_world(zs[k])); },
        cfg.threads);
    res.evaluations += lambda;

    std::vector<int> order(static_cast<std::size_t>(lambda));
    std::iota(order.begin(), order.end(), 0);
    int finite = 0;
    double fsum = 0.0;
    for (double v : fv)
      if (std::isfinite(v)) {
        ++finite;
        fsum += v;
      }
    if (finite == 0)
      throw OptimizationFailed("objective was non-finite for every candidate "
                               "in generation " + std::to_string(gen));
    auto key = [&](int k) {
      const double v = fv[static_cast<std::size_t>(k)];
      return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int bb) { return key(a) < key(bb); });
    const int top = order.front();
    if (key(top) < res.best_value) {
      res.best_value = key(top);
      res.best = to_world(zs[static_cast<std::size_t>(top)]);
    }
    res.history.push_back({gen, res.best_value, fsum / finite, sigma});

    // recombination
    const Eigen::VectorXd old = mean;
    mean.setZero();
    for (int i = 0; i < mu; ++i)
      mean += w(i) * zs[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
    const Eigen::VectorXd step = (mean - old) / sigma;

    // C^{-1/2} = B D^{-1} B^T
    const Eigen::MatrixXd cinv_half =
        b * d.cwiseInverse().asDiagonal() * b.transpose();
    ps = (1.0 - cs) * ps + std::sqrt(cs * (2.0 - cs) * mueff) * (cinv_half * step);
    const double psn = ps.norm();
    const double hsig_lhs =
        psn / std::sqrt(1.0 - std::pow(1.0 - cs, 2.0 * (gen + 1))) / chin;
    const bool hsig = hsig_lhs < 1.4 + 2.0 / (n + 1.0);
    pc = (1.0 - cc) * pc + (hsig ? std::sqrt(cc * (2.0 - cc) * mueff) : 0.0) * step;

    Eigen::MatrixXd rank_mu = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < mu; ++i) {
      const Eigen::VectorXd y =
          (zs[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] - old) /
          sigma;
      rank_mu += w(i) * y * y.transpose();
    }
    c = (1.0 - c1 - cmu) * c +
        c1 * (pc * pc.transpose() + (hsig ? 0.0 : cc * (2.0 - cc)) * c) +
        cmu * rank_mu;
    sigma *= std::exp((cs / ds) * (psn / chin - 1.0));
    sigma = std::min(sigma, 1.0);  // never wider than the box

    c = 0.5 * (c + c.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
    b = es.eigenvectors();
    d = es.eigenvalues().cwiseMax(1e-20).cwiseSqrt();
    if (sigma * d.maxCoeff() < cfg.tol_x) break;
  }
  return res;
}

}  // namespace sampid

#endif  // SAMPID_CMAES_HPP_
