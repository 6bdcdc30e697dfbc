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

// Test-only rasterization oracle for oriented-rectangle overlap. It samples
// cell centers of a regular grid and shares no code with the polygon
// clipping path it checks.

#ifndef CGNET_TESTS_RASTER_ORACLE_H_
#define CGNET_TESTS_RASTER_ORACLE_H_

#include "cgnet/geometry.h"

namespace cgnet::testing {

struct RasterCounts {
  long long a = 0;
  long long b = 0;
  long long both = 0;
  double Iou() const {
    const long long uni = a + b - both;
    return uni > 0 ? static_cast<double>(both) / uni : 0.0;
  }
};

bool InsideRect(const Grasp5D& g, double px, double py);

// Tests every cell center of an n x n grid spanning the union bounding box.
RasterCounts RasterizeBrute(const Grasp5D& a, const Grasp5D& b, int n);

// Same sampling grid, counted per row from the exact inside interval of each
// rectangle along the row. Agrees with RasterizeBrute cell for cell.
RasterCounts RasterizeRows(const Grasp5D& a, const Grasp5D& b, int n);

inline double RasterIou(const Grasp5D& a, const Grasp5D& b, int n = 2048) {
  return RasterizeRows(a, b, n).Iou();
}

}  // namespace cgnet::testing

#endif  // CGNET_TESTS_RASTER_ORACLE_H_
