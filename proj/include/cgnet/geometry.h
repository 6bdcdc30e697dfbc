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

#ifndef CGNET_GEOMETRY_H_
#define CGNET_GEOMETRY_H_

#include <array>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace cgnet {

inline constexpr double kPi = std::numbers::pi;

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Reduces an angle into [0, pi). Grasps are symmetric under a half turn of
// the gripper, so this is the canonical orientation.
double ReduceModPi(double theta);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

// Oriented grasp rectangle in image pixels. `w` is measured along the
// direction `theta` (the gripper opening), `h` along the plates.
struct Grasp5D {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  double w = 1.0;
  double h = 1.0;

  // Validating constructor: reduces theta and rejects non-positive sizes.
  static Grasp5D Make(double x, double y, double theta, double w, double h);

  std::array<Point2, 4> Corners() const;
  double Area() const { return w * h; }
  bool Valid() const;

  friend bool operator==(const Grasp5D&, const Grasp5D&) = default;
};

// Axis-aligned box stored as center and size, the parameterization used by
// proposals and box regression.
struct Box {
  double cx = 0.0;
  double cy = 0.0;
  double w = 1.0;
  double h = 1.0;

  double x1() const { return cx - 0.5 * w; }
  double y1() const { return cy - 0.5 * h; }
  double x2() const { return cx + 0.5 * w; }
  double y2() const { return cy + 0.5 * h; }
  double Area() const { return w * h; }
  bool Contains(double x, double y) const {
    return x >= x1() && x <= x2() && y >= y1() && y <= y2();
  }
  static Box FromCorners(double x1, double y1, double x2, double y2);

  friend bool operator==(const Box&, const Box&) = default;
};

// Smallest axis-aligned box containing the rotated rectangle.
Box Hull(const Grasp5D& g);
double BoxIou(const Box& a, const Box& b);

// Orientation-classification label. Indices [0, n_orient) are orientation
// bins; the two garbage classes sit directly after them.
class OrientationClass {
 public:
  enum class Kind { kOrientation, kBackground, kNotTarget };

  static OrientationClass Orientation(int index) {
    return OrientationClass(Kind::kOrientation, index);
  }
  static OrientationClass Background() {
    return OrientationClass(Kind::kBackground, -1);
  }
  static OrientationClass NotTarget() {
    return OrientationClass(Kind::kNotTarget, -1);
  }
  // Inverse of Flat(): maps a class-vector position back to a label.
  static OrientationClass FromFlat(int flat, int n_orient);

  Kind kind() const { return kind_; }
  bool is_orientation() const { return kind_ == Kind::kOrientation; }
  bool is_background() const { return kind_ == Kind::kBackground; }
  bool is_not_target() const { return kind_ == Kind::kNotTarget; }
  // Orientation bin; throws for BG/NT.
  int index() const;
  // Position in a length n_orient + 2 class vector.
  int Flat(int n_orient) const;

  friend bool operator==(const OrientationClass&,
                         const OrientationClass&) = default;

 private:
  OrientationClass(Kind kind, int index) : kind_(kind), index_(index) {}
  Kind kind_;
  int index_;
};

inline int NumClasses(int n_orient) { return n_orient + 2; }

// Polygon clipping IoU of two oriented rectangles.
double RectIou(const Grasp5D& a, const Grasp5D& b);

// Intersection area of two convex polygons given counter-clockwise.
double ConvexIntersectionArea(std::span<const Point2> a,
                              std::span<const Point2> b);

// Smallest difference between two orientations under half-turn symmetry,
// in [0, pi/2].
double AngleError(double a, double b);

// Uniform left-closed bins of width pi / n_orient.
int ThetaToClass(double theta, int n_orient);
double ClassToTheta(const OrientationClass& c, int n_orient);
inline double ClassToTheta(int index, int n_orient) {
  return ClassToTheta(OrientationClass::Orientation(index), n_orient);
}

struct ScoredGrasp {
  Grasp5D grasp;
  double score = 0.0;
};

// Greedy rotated non-maximum suppression. Output is ordered by descending
// score; ties keep input order.
std::vector<ScoredGrasp> RotatedNms(std::span<const ScoredGrasp> grasps,
                                    double iou_threshold = 0.5);

inline double DegToRad(double deg) { return deg * kPi / 180.0; }
inline double RadToDeg(double rad) { return rad * 180.0 / kPi; }

}  // namespace cgnet

#endif  // CGNET_GEOMETRY_H_
