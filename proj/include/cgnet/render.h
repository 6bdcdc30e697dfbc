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

// Annotated result images: oriented grasp rectangles, retrieval boxes and a
// "NO GRASP" banner, written as binary PPM.

#ifndef CGNET_RENDER_H_
#define CGNET_RENDER_H_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cgnet/eval.h"
#include "cgnet/geometry.h"
#include "cgnet/scene.h"

namespace cgnet {

inline constexpr Rgb kDetectionColor{230, 20, 20};
inline constexpr Rgb kRegionColor{20, 200, 40};
inline constexpr Rgb kTextColor{255, 255, 255};

void DrawLine(Image& image, double x0, double y0, double x1, double y1, Rgb color);
void DrawGrasp(Image& image, const Grasp5D& grasp, Rgb color);
void DrawBox(Image& image, const Box& box, Rgb color);
// 5x7 bitmap glyphs; characters without a glyph are left blank.
void DrawText(Image& image, int x, int y, std::string_view text, Rgb color, int scale = 1);

// Top-k detections in red, the retrieval region (if any) in green, and a
// banner when nothing was detected.
Image RenderDetections(const Image& image, const std::vector<Detection>& detections,
                       int top_k, const std::optional<Box>& region);

std::string EncodePpm(const Image& image);
void WritePpm(const Image& image, const std::string& path);

}  // namespace cgnet

#endif  // CGNET_RENDER_H_
