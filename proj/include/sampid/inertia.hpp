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

// Rigid-body inertial parameters, the 4x4 pseudo-inertia and its
// log-Cholesky parameterization.
//
// Conventions:
//   * Rotational inertia is taken about the link-frame origin, not the CoM.
//     Use InertialParams::FromComFrame for URDF-style data (parallel axis).
//   * J = [[Sigma, h], [h^T, m]] with h = m r and
//     Sigma = 0.5 tr(I) I3 - I, so that I = tr(Sigma) I3 - Sigma.
//   * J = U U^T with U upper triangular:
//
//         U = e^alpha [ e^d1  s12   s13   t1 ]
//                     [ 0     e^d2  s23   t2 ]
//                     [ 0     0     e^d3  t3 ]
//                     [ 0     0     0     1  ]
//
//     which gives m = e^{2 alpha}, r = t and Sigma / m - r r^T = U3 U3^T.
//     Every finite phi therefore maps to a positive-definite J.

#ifndef SAMPID_INERTIA_HPP_
#define SAMPID_INERTIA_HPP_

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <sstream>

#include "sampid/errors.hpp"

namespace sampid {

inline constexpr double kDefaultFeasibilityFloor = 1e-12;

struct InertialParams {
  double mass = 1.0;
  Eigen::Vector3d com = Eigen::Vector3d::Zero();
  Eigen::Matrix3d inertia = Eigen::Matrix3d::Identity();  // about origin

  // Builds origin-frame parameters from inertia expressed about the CoM.
  static InertialParams FromComFrame(double mass, const Eigen::Vector3d& com,
                                     const Eigen::Matrix3d& inertia_com) {
    InertialParams p;
    p.mass = mass;
    p.com = com;
    p.inertia = inertia_com +
                mass * (com.squaredNorm() * Eigen::Matrix3d::Identity() -
                        com * com.transpose());
    return p;
  }

  Eigen::Matrix3d InertiaAboutCom() const {
    return inertia - mass * (com.squaredNorm() * Eigen::Matrix3d::Identity() -
                             com * com.transpose());
  }

  bool IsFinite() const {
    return std::isfinite(mass) && com.allFinite() && inertia.allFinite();
  }
};

struct PseudoInertia {
  Eigen::Matrix4d matrix = Eigen::Matrix4d::Identity();
};

// (alpha, d1, d2, d3, s12, s23, s13, t1, t2, t3)
struct LogCholeskyVector {
  using Vector10d = Eigen::Matrix<double, 10, 1>;
  Vector10d phi = Vector10d::Zero();

  static constexpr std::array<const char*, 10> kNames = {
      "alpha", "d1", "d2", "d3", "s12", "s23", "s13", "t1", "t2", "t3"};

  enum Index { kAlpha = 0, kD1, kD2, kD3, kS12, kS23, kS13, kT1, kT2, kT3 };
};

inline PseudoInertia InertialToPseudo(const InertialParams& p) {
  PseudoInertia j;
  const Eigen::Matrix3d sym = 0.5 * (p.inertia + p.inertia.transpose());
  const Eigen::Matrix3d sigma =
      0.5 * sym.trace() * Eigen::Matrix3d::Identity() - sym;
  const Eigen::Vector3d h = p.mass * p.com;
  j.matrix.topLeftCorner<3, 3>() = sigma;
  j.matrix.topRightCorner<3, 1>() = h;
  j.matrix.bottomLeftCorner<1, 3>() = h.transpose();
  j.matrix(3, 3) = p.mass;
  return j;
}

inline double MinEigenvalue(const PseudoInertia& j) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(j.matrix,
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

inline bool IsFeasible(const InertialParams& p,
                       double floor = kDefaultFeasibilityFloor) {
  if (!p.IsFinite() || !(p.mass > 0.0)) return false;
  return MinEigenvalue(InertialToPseudo(p)) > floor;
}

inline Eigen::Matrix4d LogCholeskyFactor(const LogCholeskyVector& v) {
  const auto& f = v.phi;
  Eigen::Matrix4d u = Eigen::Matrix4d::Zero();
  u(0, 0) = std::exp(f(LogCholeskyVector::kD1));
  u(1, 1) = std::exp(f(LogCholeskyVector::kD2));
  u(2, 2) = std::exp(f(LogCholeskyVector::kD3));
  u(3, 3) = 1.0;
  u(0, 1) = f(LogCholeskyVector::kS12);
  u(1, 2) = f(LogCholeskyVector::kS23);
  u(0, 2) = f(LogCholeskyVector::kS13);
  u(0, 3) = f(LogCholeskyVector::kT1);
  u(1, 3) = f(LogCholeskyVector::kT2);
  u(2, 3) = f(LogCholeskyVector::kT3);
  return std::exp(f(LogCholeskyVector::kAlpha)) * u;
}

inline PseudoInertia PhiToPseudo(const LogCholeskyVector& v) {
  if (!v.phi.allFinite()) {
    throw InvalidArgument("log-Cholesky vector contains non-finite entries");
  }
  const Eigen::Matrix4d u = LogCholeskyFactor(v);
  PseudoInertia j;
  j.matrix = u * u.transpose();
  return j;
}

inline InertialParams PseudoToInertial(const PseudoInertia& j) {
  const double min_eig = MinEigenvalue(j);
  if (!(min_eig > 0.0)) {
    std::ostringstream os;
    os << "pseudo-inertia is not positive definite (min eigenvalue " << min_eig
       << ")";
    throw InfeasibleParameter(os.str(), min_eig);
  }
  InertialParams p;
  p.mass = j.matrix(3, 3);
  p.com = j.matrix.topRightCorner<3, 1>() / p.mass;
  const Eigen::Matrix3d sigma = j.matrix.topLeftCorner<3, 3>();
  p.inertia = sigma.trace() * Eigen::Matrix3d::Identity() - sigma;
  return p;
}

inline InertialParams PhiToInertial(const LogCholeskyVector& v) {
  // Closed form; avoids the eigen check that PseudoToInertial performs.
  const auto& f = v.phi;
  const Eigen::Matrix4d u = LogCholeskyFactor(v);
  const Eigen::Matrix4d j = u * u.transpose();
  InertialParams p;
  p.mass = j(3, 3);
  p.com = f.segment<3>(LogCholeskyVector::kT1);
  const Eigen::Matrix3d sigma = j.topLeftCorner<3, 3>();
  p.inertia = sigma.trace() * Eigen::Matrix3d::Identity() - sigma;
  return p;
}

// Inverse map. The 3x3 block A = Sigma/m - r r^T is factored as U3 U3^T with
// U3 upper triangular, eliminating from the last row/column upward.
inline LogCholeskyVector InertialToPhi(const InertialParams& p) {
  const PseudoInertia j = InertialToPseudo(p);
  const double min_eig = MinEigenvalue(j);
  if (!p.IsFinite() || !(min_eig > kDefaultFeasibilityFloor) ||
      !(p.mass > 0.0)) {
    std::ostringstream os;
    os << "infeasible inertial parameters: mass " << p.mass
       << ", min pseudo-inertia eigenvalue " << min_eig;
    throw InfeasibleParameter(os.str(), min_eig);
  }
  const double m = j.matrix(3, 3);
  const Eigen::Vector3d r = j.matrix.topRightCorner<3, 1>() / m;
  Eigen::Matrix3d a = j.matrix.topLeftCorner<3, 3>() / m - r * r.transpose();

  Eigen::Matrix3d u = Eigen::Matrix3d::Zero();
  for (int k = 2; k >= 0; --k) {
    const double pivot = a(k, k);
    if (!(pivot > 0.0)) {
      throw InfeasibleParameter("log-Cholesky factorization lost positivity",
                                pivot);
    }
    u(k, k) = std::sqrt(pivot);
    for (int i = 0; i < k; ++i) u(i, k) = a(i, k) / u(k, k);
    for (int i = 0; i < k; ++i)
      for (int l = 0; l < k; ++l) a(i, l) -= u(i, k) * u(l, k);
  }

  LogCholeskyVector v;
  v.phi(LogCholeskyVector::kAlpha) = 0.5 * std::log(m);
  v.phi(LogCholeskyVector::kD1) = std::log(u(0, 0));
  v.phi(LogCholeskyVector::kD2) = std::log(u(1, 1));
  v.phi(LogCholeskyVector::kD3) = std::log(u(2, 2));
  v.phi(LogCholeskyVector::kS12) = u(0, 1);
  v.phi(LogCholeskyVector::kS23) = u(1, 2);
  v.phi(LogCholeskyVector::kS13) = u(0, 2);
  v.phi.segment<3>(LogCholeskyVector::kT1) = r;
  return v;
}

}  // namespace sampid

#endif  // SAMPID_INERTIA_HPP_
