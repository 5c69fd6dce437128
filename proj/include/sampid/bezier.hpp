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

// Command plans made of fixed-length segments. Each segment holds one Bezier
// curve per optimized command channel plus a discrete gait index.

#ifndef SAMPID_BEZIER_HPP_
#define SAMPID_BEZIER_HPP_

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "json.hpp"
#include "sampid/controller.hpp"
#include "sampid/dataset.hpp"
#include "sampid/errors.hpp"

namespace sampid {

// De Casteljau evaluation of the Bezier curve with the given control points.
inline double BezierEval(const Eigen::VectorXd& points, double s) {
  if (!(s >= 0.0 && s <= 1.0))
    throw InvalidArgument("Bezier parameter must lie in [0, 1]");
  if (points.size() == 0) throw InvalidArgument("Bezier curve has no points");
  Eigen::VectorXd b = points;
  for (long r = points.size() - 1; r > 0; --r)
    for (long i = 0; i < r; ++i) b(i) = (1.0 - s) * b(i) + s * b(i + 1);
  return b(0);
}

struct PlanSegment {
  double duration = 4.0;   // s
  Eigen::MatrixXd points;  // channels x (degree + 1)
  int gait = 0;            // index into kGaitOffsets
};

struct BezierCommandPlan {
  std::vector<int> channels;  // CommandVector channel per row of points
  std::vector<PlanSegment> segments;

  double Duration() const {
    double t = 0.0;
    for (const auto& s : segments) t += s.duration;
    return t;
  }

  long VariableCount() const {
    long n = 0;
    for (const auto& s : segments) n += s.points.size();
    return n;
  }

  // Control points of all segments, segment-major then channel-major.
  Eigen::VectorXd Flatten() const {
    Eigen::VectorXd v(VariableCount());
    long k = 0;
    for (const auto& s : segments)
      for (long r = 0; r < s.points.rows(); ++r)
        for (long c = 0; c < s.points.cols(); ++c) v(k++) = s.points(r, c);
    return v;
  }

  void Unflatten(const Eigen::VectorXd& v) {
    if (v.size() != VariableCount())
      throw InvalidArgument("plan vector has wrong length");
    long k = 0;
    for (auto& s : segments)
      for (long r = 0; r < s.points.rows(); ++r)
        for (long c = 0; c < s.points.cols(); ++c) s.points(r, c) = v(k++);
  }

  void Validate() const {
    for (const auto& s : segments) {
      if (!(s.duration > 0.0))
        throw ConfigurationError("plan segment duration must be positive");
      if (s.points.rows() != static_cast<long>(channels.size()))
        throw ConfigurationError("plan segment has wrong channel count");
      if (s.gait < 0 || s.gait > 3)
        throw ConfigurationError("gait index must be 0..3");
    }
    for (int ch : channels)
      if (ch < 0 || ch >= CommandVector::kCount)
        throw ConfigurationError("plan channel out of range");
  }
};

// Plan whose curves are constant at `value` per channel.
inline BezierCommandPlan ConstantPlan(const std::vector<int>& channels,
                                      const Eigen::VectorXd& value,
                                      int segments, double duration = 4.0,
                                      int degree = 10, int gait = 0) {
  BezierCommandPlan plan;
  plan.channels = channels;
  for (int i = 0; i < segments; ++i) {
    PlanSegment s;
    s.duration = duration;
    s.gait = gait;
    s.points = value.replicate(1, degree + 1);
    plan.segments.push_back(s);
  }
  plan.Validate();
  return plan;
}

// One command per control tick. Optimized channels come from the curves at
// s = t_local / duration, (b1, b2) from the segment's gait and everything
// else from `fixed`.
inline std::vector<CommandVector> PlanToCommands(const BezierCommandPlan& plan,
                                                 double dt,
                                                 const CommandVector& fixed) {
  plan.Validate();
  std::vector<CommandVector> out;
  for (const auto& seg : plan.segments) {
    const int ticks = HorizonSteps(seg.duration, dt);
    for (int k = 0; k < ticks; ++k) {
      const double s = std::min(1.0, k * dt / seg.duration);
      CommandVector c = fixed;
      for (std::size_t r = 0; r < plan.channels.size(); ++r)
        c[plan.channels[r]] =
            BezierEval(seg.points.row(static_cast<long>(r)).transpose(), s);
      SetGait(c, seg.gait);
      out.push_back(c);
    }
  }
  return out;
}

inline nlohmann::json PlanToJson(const BezierCommandPlan& plan) {
  nlohmann::json ch = nlohmann::json::array();
  for (int c : plan.channels)
    ch.push_back(CommandVector::kNames[static_cast<std::size_t>(c)]);
  nlohmann::json segs = nlohmann::json::array();
  for (const auto& s : plan.segments) {
    nlohmann::json pts = nlohmann::json::array();
    for (long r = 0; r < s.points.rows(); ++r) {
      std::vector<double> row(static_cast<std::size_t>(s.points.cols()));
      for (long c = 0; c < s.points.cols(); ++c)
        row[static_cast<std::size_t>(c)] = s.points(r, c);
      pts.push_back(row);
    }
    segs.push_back({{"duration", s.duration}, {"gait", s.gait},
                    {"control_points", pts}});
  }
  return {{"channels", ch}, {"segments", segs}};
}

inline BezierCommandPlan PlanFromJson(const nlohmann::json& j) {
  BezierCommandPlan plan;
  try {
    for (const auto& c : j.at("channels"))
      plan.channels.push_back(CommandVector::ChannelIndex(c.get<std::string>()));
    for (const auto& s : j.at("segments")) {
      PlanSegment seg;
      seg.duration = s.value("duration", 4.0);
      seg.gait = s.value("gait", 0);
      const auto& pts = s.at("control_points");
      const long rows = static_cast<long>(pts.size());
      const long cols = rows ? static_cast<long>(pts[0].size()) : 0;
      seg.points.resize(rows, cols);
      for (long r = 0; r < rows; ++r) {
        if (static_cast<long>(pts[static_cast<std::size_t>(r)].size()) != cols)
          throw ConfigurationError("ragged control point rows");
        for (long c = 0; c < cols; ++c)
          seg.points(r, c) = pts[static_cast<std::size_t>(r)]
                                [static_cast<std::size_t>(c)]
                                    .get<double>();
      }
      plan.segments.push_back(seg);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigurationError(std::string("bad plan JSON: ") + e.what());
  }
  plan.Validate();
  return plan;
}

}  // namespace sampid

#endif  // SAMPID_BEZIER_HPP_
