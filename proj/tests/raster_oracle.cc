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

#include "raster_oracle.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cgnet::testing {

namespace {

struct Grid {
  double x0, y0, dx, dy;
  int n;
};

Grid UnionGrid(const Grasp5D& a, const Grasp5D& b, int n) {
  double x1 = std::numeric_limits<double>::max(), y1 = x1;
  double x2 = -x1, y2 = -x1;
  for (const Grasp5D* g : {&a, &b}) {
    for (const Point2& p : g->Corners()) {
      x1 = std::min(x1, p.x);
      y1 = std::min(y1, p.y);
      x2 = std::max(x2, p.x);
      y2 = std::max(y2, p.y);
    }
  }
  return Grid{x1, y1, (x2 - x1) / n, (y2 - y1) / n, n};
}

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool empty() const { return !(lo <= hi); }
};

// Restricts `iv` to x with |k * x + m| <= half.
void Clip(Interval& iv, double k, double m, double half) {
  if (std::abs(k) < 1e-15) {
    if (std::abs(m) > half) iv = Interval{1.0, -1.0};
    return;
  }
  double lo = (-half - m) / k;
  double hi = (half - m) / k;
  if (lo > hi) std::swap(lo, hi);
  iv.lo = std::max(iv.lo, lo);
  iv.hi = std::min(iv.hi, hi);
}

Interval RowInterval(const Grasp5D& g, double y) {
  const double c = std::cos(g.theta), s = std::sin(g.theta);
  const double dy = y - g.y;
  Interval iv;
  // u = (x - gx) c + dy s ; v = -(x - gx) s + dy c
  Clip(iv, c, -g.x * c + dy * s, 0.5 * g.w);
  Clip(iv, -s, g.x * s + dy * c, 0.5 * g.h);
  return iv;
}

long long CountCenters(const Interval& iv, const Grid& grid) {
  if (iv.empty()) return 0;
  // Cell centers x0 + (i + 0.5) dx for i in [0, n).
  const double flo = (iv.lo - grid.x0) / grid.dx - 0.5;
  const double fhi = (iv.hi - grid.x0) / grid.dx - 0.5;
  long long first = static_cast<long long>(std::ceil(flo));
  long long last = static_cast<long long>(std::floor(fhi));
  first = std::max<long long>(first, 0);
  last = std::min<long long>(last, grid.n - 1);
  return last >= first ? last - first + 1 : 0;
}

}  // namespace

bool InsideRect(const Grasp5D& g, double px, double py) {
  const double c = std::cos(g.theta), s = std::sin(g.theta);
  const double dx = px - g.x, dy = py - g.y;
  const double u = dx * c + dy * s;
  const double v = -dx * s + dy * c;
  return std::abs(u) <= 0.5 * g.w && std::abs(v) <= 0.5 * g.h;
}

RasterCounts RasterizeBrute(const Grasp5D& a, const Grasp5D& b, int n) {
  const Grid grid = UnionGrid(a, b, n);
  RasterCounts counts;
  for (int j = 0; j < n; ++j) {
    const double py = grid.y0 + (j + 0.5) * grid.dy;
    for (int i = 0; i < n; ++i) {
      const double px = grid.x0 + (i + 0.5) * grid.dx;
      const bool ina = InsideRect(a, px, py);
      const bool inb = InsideRect(b, px, py);
      counts.a += ina;
      counts.b += inb;
      counts.both += ina && inb;
    }
  }
  return counts;
}

RasterCounts RasterizeRows(const Grasp5D& a, const Grasp5D& b, int n) {
  const Grid grid = UnionGrid(a, b, n);
  RasterCounts counts;
  for (int j = 0; j < n; ++j) {
    const double py = grid.y0 + (j + 0.5) * grid.dy;
    const Interval ia = RowInterval(a, py);
    const Interval ib = RowInterval(b, py);
    Interval both{std::max(ia.lo, ib.lo), std::min(ia.hi, ib.hi)};
    if (ia.empty() || ib.empty()) both = Interval{1.0, -1.0};
    counts.a += CountCenters(ia, grid);
    counts.b += CountCenters(ib, grid);
    counts.both += CountCenters(both, grid);
  }
  return counts;
}

}  // namespace cgnet::testing
