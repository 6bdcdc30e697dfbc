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

// Procedural multi-object tabletop scenes with oriented grasp annotations.
//
// Objects are flat textured primitives (disks, bars, rings, arcs and
// compositions of them). Each category has a fixed shape recipe and palette;
// instances vary in pose and scale. Grasps are placed across the narrow
// direction of each graspable part, and objects are composited back to front
// by depth order so that later objects partially cover earlier ones.

#ifndef CGNET_SCENE_H_
#define CGNET_SCENE_H_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cgnet/geometry.h"
#include "cgnet/kv_config.h"

namespace cgnet {

class PlacementError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

// Interleaved 8-bit RGB, row major.
struct Image {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(int h, int w) : height(h), width(w), pixels(3 * h * w, 0) {}

  std::uint8_t* at(int y, int x) { return &pixels[3 * (y * width + x)]; }
  const std::uint8_t* at(int y, int x) const {
    return &pixels[3 * (y * width + x)];
  }
  void Set(int y, int x, Rgb c) {
    std::uint8_t* p = at(y, x);
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }

  friend bool operator==(const Image&, const Image&) = default;
};

// Category registry shared with command generation. `name` is the surface
// form used in commands and may contain several words.
struct CategoryInfo {
  std::string name;
  Rgb body;
  Rgb accent;
};
const std::vector<CategoryInfo>& CategoryRegistry();
int FindCategory(const std::string& name);  // -1 when unknown

struct ObjectPose {
  double cx = 0.0;
  double cy = 0.0;
  double angle = 0.0;
  double scale = 1.0;  // overall object length in pixels
  friend bool operator==(const ObjectPose&, const ObjectPose&) = default;
};

struct SceneObject {
  int category = 0;
  Box bbox;  // tight box of the object's full (unoccluded) mask
  std::vector<Grasp5D> grasps;
  int depth_order = 0;  // larger is closer to the camera
  ObjectPose pose;
  double visible_fraction = 1.0;

  friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

struct Scene {
  Image image;
  std::vector<SceneObject> objects;
  std::uint64_t rng_seed = 0;

  std::size_t NumGrasps() const;
  friend bool operator==(const Scene&, const Scene&) = default;
};

struct SceneConfig {
  int height = 128;
  int width = 128;
  int num_categories = 8;
  int min_objects = 3;
  int max_objects = 5;
  double min_visibility = 0.3;
  int min_grasps = 2;
  int max_grasps = 6;
  double min_scale = 34.0;
  double max_scale = 46.0;
  int max_retries = 200;

  void Validate() const;
  static SceneConfig FromKeyValues(KeyValueConfig& kv);
  void ToKeyValues(std::map<std::string, std::string>& out) const;
};

Scene GenerateScene(const SceneConfig& config, std::uint64_t seed);

// Full object mask (ignoring occlusion), one byte per pixel.
std::vector<std::uint8_t> RasterizeObject(const SceneObject& object,
                                          int height, int width);

// Per-pixel index of the topmost object, -1 for table.
std::vector<int> OwnerMap(const Scene& scene);

struct DatasetSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Deterministic shuffled split of `num_scenes` indices. Both sides are
// returned sorted.
DatasetSplit SplitDataset(std::size_t num_scenes, double train_fraction,
                          std::uint64_t seed);

// Self-describing scene container: header (magic, version, config hash,
// config text), per-scene records with deflated pixels, trailing CRC32.
inline constexpr std::uint32_t kDatasetVersion = 1;

struct SceneFile {
  std::string config_text;
  std::vector<Scene> scenes;
};

void SerializeDataset(const std::vector<Scene>& scenes,
                      const std::string& config_text, const std::string& path);
SceneFile LoadDataset(const std::string& path);

}  // namespace cgnet

#endif  // CGNET_SCENE_H_
