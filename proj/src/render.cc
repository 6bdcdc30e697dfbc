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

#include "cgnet/render.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include "cgnet/binary_io.h"

namespace cgnet {

namespace {

void Plot(Image& image, int x, int y, Rgb color) {
  if (x >= 0 && y >= 0 && x < image.width && y < image.height) image.Set(y, x, color);
}

// Rows top to bottom, bit 4 is the leftmost column.
const std::map<char, std::array<std::uint8_t, 7>>& Glyphs() {
  static const std::map<char, std::array<std::uint8_t, 7>> glyphs{
      {'A', {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
      {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}},
      {'N', {0x11, 0x19, 0x15, 0x13, 0x11, 0x11, 0x11}},
      {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
      {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
      {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
      {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}},
  };
  return glyphs;
}

}  // namespace

void DrawLine(Image& image, double x0, double y0, double x1, double y1, Rgb color) {
  const double len = std::max(std::abs(x1 - x0), std::abs(y1 - y0));
  const int steps = std::max(1, static_cast<int>(std::ceil(len)));
  for (int i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) / steps;
    Plot(image, static_cast<int>(std::lround(x0 + t * (x1 - x0))),
         static_cast<int>(std::lround(y0 + t * (y1 - y0))), color);
  }
}

void DrawGrasp(Image& image, const Grasp5D& grasp, Rgb color) {
  const auto c = grasp.Corners();
  for (int i = 0; i < 4; ++i) {
    const Point2& a = c[i];
    const Point2& b = c[(i + 1) % 4];
    DrawLine(image, a.x, a.y, b.x, b.y, color);
  }
}

void DrawBox(Image& image, const Box& box, Rgb color) {
  DrawLine(image, box.x1(), box.y1(), box.x2(), box.y1(), color);
  DrawLine(image, box.x2(), box.y1(), box.x2(), box.y2(), color);
  DrawLine(image, box.x2(), box.y2(), box.x1(), box.y2(), color);
  DrawLine(image, box.x1(), box.y2(), box.x1(), box.y1(), color);
}

void DrawText(Image& image, int x, int y, std::string_view text, Rgb color, int scale) {
  for (char ch : text) {
    const auto it = Glyphs().find(ch);
    if (it != Glyphs().end()) {
      for (int r = 0; r < 7; ++r) {
        for (int c = 0; c < 5; ++c) {
          if (!(it->second[r] & (0x10 >> c))) continue;
          for (int dy = 0; dy < scale; ++dy) {
            for (int dx = 0; dx < scale; ++dx) {
              Plot(image, x + c * scale + dx, y + r * scale + dy, color);
            }
          }
        }
      }
    }
    x += 6 * scale;
  }
}

Image RenderDetections(const Image& image, const std::vector<Detection>& detections,
                       int top_k, const std::optional<Box>& region) {
  Image out = image;
  if (region) DrawBox(out, *region, kRegionColor);
  const std::size_t n = std::min<std::size_t>(std::max(top_k, 0), detections.size());
  // Lowest rank first so the top detection is drawn last and stays visible.
  for (std::size_t i = n; i-- > 0;) DrawGrasp(out, detections[i].grasp, kDetectionColor);
  if (detections.empty()) {
    const std::string banner = "NO GRASP";
    const int w = static_cast<int>(banner.size()) * 6 - 1;
    const int x = std::max(0, (out.width - w) / 2);
    for (int yy = 1; yy < 10; ++yy) {
      for (int xx = x - 2; xx < x + w + 2; ++xx) Plot(out, xx, yy, Rgb{0, 0, 0});
    }
    DrawText(out, x, 2, banner, kTextColor);
  }
  return out;
}

std::string EncodePpm(const Image& image) {
  std::string out = "P6\n" + std::to_string(image.width) + " " +
                    std::to_string(image.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(image.pixels.data()), image.pixels.size());
  return out;
}

void WritePpm(const Image& image, const std::string& path) {
  WriteWholeFile(path, EncodePpm(image));
}

}  // namespace cgnet
