/* Copyright 2026 The CGNet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "cgnet/geometry.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace cgnet {

namespace {

double SignedArea(std::span<const Point2> poly) {
  double area = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point2& p = poly[i];
    const Point2& q = poly[(i + 1) % poly.size()];
    area += p.x * q.y - p.y * q.x;
  }
  return 0.5 * area;
}

// > 0 when p is left of the directed edge a->b.
double Side(const Point2& a, const Point2& b, const Point2& p) {
  return (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
}

Point2 EdgeIntersection(const Point2& p, const Point2& q, double sp,
                        double sq) {
  const double t = sp / (sp - sq);
  return {p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)};
}

std::array<Point2, 4> CounterClockwiseCorners(const Grasp5D& g) {
  std::array<Point2, 4> c = g.Corners();
  if (SignedArea(c) < 0.0) std::reverse(c.begin(), c.end());
  return c;
}

}  // namespace

double ReduceModPi(double theta) {
  double r = std::fmod(theta, kPi);
  if (r < 0.0) r += kPi;
  // fmod of values just below a multiple of pi can round up to pi itself.
  if (r >= kPi) r = 0.0;
  return r;
}

Grasp5D Grasp5D::Make(double x, double y, double theta, double w, double h) {
  if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(theta)) {
    throw GeometryError("grasp has non-finite center or angle");
  }
  if (!(w > 0.0) || !(h > 0.0) || !std::isfinite(w) || !std::isfinite(h)) {
    throw GeometryError("grasp size must be positive, got w=" +
                        std::to_string(w) + " h=" + std::to_string(h));
  }
  return Grasp5D{x, y, ReduceModPi(theta), w, h};
}

bool Grasp5D::Valid() const {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(theta) &&
         std::isfinite(w) && std::isfinite(h) && w > 0.0 && h > 0.0;
}

std::array<Point2, 4> Grasp5D::Corners() const {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  // Half extents along the opening axis (u) and the plate axis (v).
  const double ux = 0.5 * w * c, uy = 0.5 * w * s;
  const double vx = -0.5 * h * s, vy = 0.5 * h * c;
  return {Point2{x - ux - vx, y - uy - vy}, Point2{x + ux - vx, y + uy - vy},
          Point2{x + ux + vx, y + uy + vy}, Point2{x - ux + vx, y - uy + vy}};
}

Box Box::FromCorners(double x1, double y1, double x2, double y2) {
  return Box{0.5 * (x1 + x2), 0.5 * (y1 + y2), x2 - x1, y2 - y1};
}

Box Hull(const Grasp5D& g) {
  const double c = std::abs(std::cos(g.theta));
  const double s = std::abs(std::sin(g.theta));
  return Box{g.x, g.y, g.w * c + g.h * s, g.w * s + g.h * c};
}

double BoxIou(const Box& a, const Box& b) {
  const double iw = std::min(a.x2(), b.x2()) - std::max(a.x1(), b.x1());
  const double ih = std::min(a.y2(), b.y2()) - std::max(a.y1(), b.y1());
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.Area() + b.Area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

OrientationClass OrientationClass::FromFlat(int flat, int n_orient) {
  if (flat >= 0 && flat < n_orient) return Orientation(flat);
  if (flat == n_orient) return Background();
  if (flat == n_orient + 1) return NotTarget();
  throw GeometryError("class position " + std::to_string(flat) +
                      " out of range for " + std::to_string(n_orient) +
                      " orientations");
}

int OrientationClass::index() const {
  if (kind_ != Kind::kOrientation) {
    throw GeometryError("BG/NT class has no orientation index");
  }
  return index_;
}

int OrientationClass::Flat(int n_orient) const {
  switch (kind_) {
    case Kind::kOrientation:
      return index_;
    case Kind::kBackground:
      return n_orient;
    case Kind::kNotTarget:
      return n_orient + 1;
  }
  return -1;
}

double ConvexIntersectionArea(std::span<const Point2> a,
                              std::span<const Point2> b) {
  std::vector<Point2> out(a.begin(), a.end());
  std::vector<Point2> in;
  for (std::size_t e = 0; e < b.size() && !out.empty(); ++e) {
    const Point2& ea = b[e];
    const Point2& eb = b[(e + 1) % b.size()];
    in.swap(out);
    out.clear();
    for (std::size_t i = 0; i < in.size(); ++i) {
      const Point2& p = in[i];
      const Point2& q = in[(i + 1) % in.size()];
      const double sp = Side(ea, eb, p);
      const double sq = Side(ea, eb, q);
      if (sp >= 0.0) out.push_back(p);
      if ((sp >= 0.0) != (sq >= 0.0)) {
        out.push_back(EdgeIntersection(p, q, sp, sq));
      }
    }
  }
  if (out.size() < 3) return 0.0;
  return std::abs(SignedArea(out));
}

double RectIou(const Grasp5D& a, const Grasp5D& b) {
  if (!a.Valid() || !b.Valid()) {
    throw GeometryError("RectIou on degenerate rectangle");
  }
  const auto ca = CounterClockwiseCorners(a);
  const auto cb = CounterClockwiseCorners(b);
  const double inter = ConvexIntersectionArea(ca, cb);
  const double uni = a.Area() + b.Area() - inter;
  if (!(uni > 0.0)) throw GeometryError("RectIou has zero union area");
  return std::clamp(inter / uni, 0.0, 1.0);
}

double AngleError(double a, double b) {
  const double d = ReduceModPi(a - b);
  return std::min(d, kPi - d);
}

int ThetaToClass(double theta, int n_orient) {
  if (n_orient < 1) throw GeometryError("n_orient must be >= 1");
  const double width = kPi / n_orient;
  const int c = static_cast<int>(std::floor(ReduceModPi(theta) / width));
  return std::clamp(c, 0, n_orient - 1);
}

double ClassToTheta(const OrientationClass& c, int n_orient) {
  if (!c.is_orientation()) {
    throw GeometryError("cannot convert BG/NT class to an angle");
  }
  if (c.index() < 0 || c.index() >= n_orient) {
    throw GeometryError("orientation index out of range");
  }
  return (c.index() + 0.5) * kPi / n_orient;
}

std::vector<ScoredGrasp> RotatedNms(std::span<const ScoredGrasp> grasps,
                                    double iou_threshold) {
  std::vector<std::size_t> order(grasps.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) {
    return grasps[i].score > grasps[j].score;
  });
  std::vector<ScoredGrasp> kept;
  for (std::size_t i : order) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](auto& k) {
      return RectIou(k.grasp, grasps[i].grasp) > iou_threshold;
    });
    if (!suppressed) kept.push_back(grasps[i]);
  }
  return kept;
}

}  // namespace cgnet
