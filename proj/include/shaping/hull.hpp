// Copyright 2026 The traffic-shaping Authors
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

#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "shaping/probe.hpp"

namespace shaping {

/// One probed (exposure, reward) pair, tagged with the bonus that produced it.
struct FrontierPoint {
  double exposure = 0.0;
  double reward = 0.0;
  double bonus = 0.0;
};

/// Upper frontier of the achievable (exposure, reward) trade-offs of one
/// (group, set) cell: vertices strictly increasing in exposure, segment
/// slopes non-increasing, every input point on or below the curve.
struct HullCurve {
  std::vector<FrontierPoint> vertices;
  std::vector<double> segment_slopes;  // reward change per unit exposure

  double min_exposure() const { return vertices.front().exposure; }
  double max_exposure() const { return vertices.back().exposure; }
};

/// Chord test: true iff `candidate` lies strictly below the segment from
/// `left` to `right`. Division-free so collinear points are classified
/// exactly; ties (candidate on the chord) are kept.
inline bool eliminate_predicate(const FrontierPoint& candidate, const FrontierPoint& left,
                                const FrontierPoint& right) {
  if (!(left.exposure <= candidate.exposure && candidate.exposure <= right.exposure)) {
    throw std::invalid_argument("eliminate_predicate: candidate outside [left, right]");
  }
  return (candidate.reward - left.reward) * (right.exposure - left.exposure) <
         (candidate.exposure - left.exposure) * (right.reward - left.reward);
}

namespace detail {

// Cross product of (a - o) x (b - o); positive when the middle point `a`
// falls strictly below the chord o-b of an exposure-sorted triple.
inline double upper_cross(const FrontierPoint& o, const FrontierPoint& a,
                          const FrontierPoint& b) {
  return (a.exposure - o.exposure) * (b.reward - o.reward) -
         (a.reward - o.reward) * (b.exposure - o.exposure);
}

inline bool same_exposure(double a, double b) {
  return std::abs(a - b) <= 1e-9 * std::max(std::abs(a), std::abs(b));
}

}  // namespace detail

/// Builds the upper frontier by a monotone scan. Points sharing an exposure
/// value (1e-9 relative) are first collapsed to the max-reward one (reward
/// ties keep the smaller bonus); collinear interior points are retained, so
/// the vertex set equals the set of points no chord eliminates.
inline HullCurve outer_convex_curve(std::vector<FrontierPoint> points) {
  if (points.empty()) {
    throw std::invalid_argument("outer_convex_curve: empty point set");
  }
  std::sort(points.begin(), points.end(), [](const FrontierPoint& a, const FrontierPoint& b) {
    if (a.exposure != b.exposure) return a.exposure < b.exposure;
    if (a.reward != b.reward) return a.reward > b.reward;
    return a.bonus < b.bonus;
  });

  // Collapse near-vertical stacks; the sort above puts the winner first.
  std::vector<FrontierPoint> collapsed;
  collapsed.reserve(points.size());
  for (const FrontierPoint& p : points) {
    if (!collapsed.empty() && detail::same_exposure(collapsed.back().exposure, p.exposure)) {
      continue;
    }
    collapsed.push_back(p);
  }

  std::vector<FrontierPoint> hull;
  hull.reserve(collapsed.size());
  for (const FrontierPoint& p : collapsed) {
    while (hull.size() >= 2 &&
           detail::upper_cross(hull[hull.size() - 2], hull.back(), p) > 0.0) {
      hull.pop_back();
    }
    hull.push_back(p);
  }

  HullCurve curve;
  curve.vertices = std::move(hull);
  curve.segment_slopes.reserve(curve.vertices.size() - 1);
  for (std::size_t v = 1; v < curve.vertices.size(); ++v) {
    const FrontierPoint& a = curve.vertices[v - 1];
    const FrontierPoint& b = curve.vertices[v];
    curve.segment_slopes.push_back((b.reward - a.reward) / (b.exposure - a.exposure));
  }
  return curve;
}

/// Piecewise-linear evaluation of the frontier. Exact at vertices.
inline double hull_value_at(const HullCurve& curve, double exposure) {
  const auto& v = curve.vertices;
  if (v.empty()) throw std::invalid_argument("hull_value_at: empty curve");
  if (exposure < v.front().exposure || exposure > v.back().exposure) {
    throw std::out_of_range("hull_value_at: exposure outside the frontier range");
  }
  auto it = std::lower_bound(v.begin(), v.end(), exposure,
                             [](const FrontierPoint& p, double x) { return p.exposure < x; });
  if (it != v.end() && it->exposure == exposure) return it->reward;
  const FrontierPoint& right = *it;
  const FrontierPoint& left = *(it - 1);
  const double t = (exposure - left.exposure) / (right.exposure - left.exposure);
  return left.reward + t * (right.reward - left.reward);
}

/// Frontier of one probed cell: points (f̄(x_t), ḡ(x_t)) tagged with x_t.
inline HullCurve cell_frontier(const ProbeCell& cell, const BonusGrid& grid) {
  std::vector<FrontierPoint> pts;
  pts.reserve(static_cast<std::size_t>(grid.size()));
  for (int t = 0; t < grid.size(); ++t) {
    pts.push_back({cell.exposure[static_cast<std::size_t>(t)],
                   cell.reward[static_cast<std::size_t>(t)], grid[t]});
  }
  return outer_convex_curve(std::move(pts));
}

}  // namespace shaping
