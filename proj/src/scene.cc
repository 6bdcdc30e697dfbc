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

#include "cgnet/scene.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "cgnet/binary_io.h"

namespace cgnet {

namespace {

enum class PartKind { kBar, kDisk, kRing, kArc, kEllipse };

// One primitive in object-local units (multiples of the object scale).
// Bar/ellipse: a, b are half extents along/across the part axis.
// Disk: a is the radius. Ring: a outer and b inner radius.
// Arc: a is the center-line radius, b the half thickness, span the half
// opening angle; the arc bulges toward -v around (u, v).
struct Part {
  PartKind kind;
  double u, v, angle;
  double a, b;
  double span = 0.0;
  bool graspable = true;
  bool accent = false;
};

using Recipe = std::vector<Part>;

const std::vector<Recipe>& Recipes() {
  static const std::vector<Recipe> recipes = {
      // apple
      {{PartKind::kDisk, 0, 0, 0, 0.36, 0}},
      // banana
      {{PartKind::kArc, 0, 0.55, 0, 0.62, 0.09, 0.75}},
      // wrist developer
      {{PartKind::kEllipse, 0, 0, 0, 0.48, 0.2},
       {PartKind::kBar, 0, 0, 0, 0.1, 0.07, 0, false, true}},
      // tape
      {{PartKind::kRing, 0, 0, 0, 0.3, 0.17}},
      // toothpaste
      {{PartKind::kBar, -0.04, 0, 0, 0.44, 0.12},
       {PartKind::kBar, 0.45, 0, 0, 0.05, 0.07, 0, false, true}},
      // wrench
      {{PartKind::kBar, -0.12, 0, 0, 0.36, 0.065},
       {PartKind::kRing, 0.33, 0, 0, 0.15, 0.075, 0, false, false}},
      // pliers
      {{PartKind::kBar, -0.1, 0.07, 0.18, 0.36, 0.055},
       {PartKind::kBar, -0.1, -0.07, -0.18, 0.36, 0.055},
       {PartKind::kBar, 0.34, 0, 0, 0.13, 0.07, 0, false, true}},
      // screwdriver
      {{PartKind::kBar, -0.27, 0, 0, 0.2, 0.1},
       {PartKind::kBar, 0.2, 0, 0, 0.28, 0.028, 0, false, true}},
  };
  return recipes;
}

constexpr Rgb kTable{95, 75, 60};

// Point (px, py) in part-local coordinates, scaled to object units.
void ToPartLocal(const ObjectPose& pose, const Part& part, double px,
                 double py, double& lu, double& lv) {
  const double dx = (px - pose.cx) / pose.scale;
  const double dy = (py - pose.cy) / pose.scale;
  const double c = std::cos(pose.angle), s = std::sin(pose.angle);
  const double ou = dx * c + dy * s - part.u;
  const double ov = -dx * s + dy * c - part.v;
  const double pc = std::cos(part.angle), ps = std::sin(part.angle);
  lu = ou * pc + ov * ps;
  lv = -ou * ps + ov * pc;
}

bool InsidePart(const Part& p, double lu, double lv) {
  switch (p.kind) {
    case PartKind::kBar:
      return std::abs(lu) <= p.a && std::abs(lv) <= p.b;
    case PartKind::kDisk:
      return lu * lu + lv * lv <= p.a * p.a;
    case PartKind::kRing: {
      const double r2 = lu * lu + lv * lv;
      return r2 <= p.a * p.a && r2 >= p.b * p.b;
    }
    case PartKind::kArc: {
      const double r = std::hypot(lu, lv);
      const double psi = std::atan2(lu, -lv);
      return std::abs(r - p.a) <= p.b && std::abs(psi) <= p.span;
    }
    case PartKind::kEllipse:
      return (lu * lu) / (p.a * p.a) + (lv * lv) / (p.b * p.b) <= 1.0;
  }
  return false;
}

// Index of the part covering the point, -1 if none. Later parts win.
int HitPart(const Recipe& recipe, const ObjectPose& pose, double px,
            double py) {
  int hit = -1;
  for (std::size_t i = 0; i < recipe.size(); ++i) {
    double lu, lv;
    ToPartLocal(pose, recipe[i], px, py, lu, lv);
    if (InsidePart(recipe[i], lu, lv)) hit = static_cast<int>(i);
  }
  return hit;
}

// Local point (object units) to image coordinates.
Point2 ToImage(const ObjectPose& pose, const Part& part, double lu,
               double lv) {
  const double pc = std::cos(part.angle), ps = std::sin(part.angle);
  const double ou = part.u + lu * pc - lv * ps;
  const double ov = part.v + lu * ps + lv * pc;
  const double c = std::cos(pose.angle), s = std::sin(pose.angle);
  return {pose.cx + pose.scale * (ou * c - ov * s),
          pose.cy + pose.scale * (ou * s + ov * c)};
}

double PartLength(const Part& p) {
  switch (p.kind) {
    case PartKind::kBar:
    case PartKind::kEllipse:
      return 2.0 * p.a;
    case PartKind::kDisk:
      return p.a;
    case PartKind::kRing:
      return kPi * (p.a + p.b);
    case PartKind::kArc:
      return 2.0 * p.span * p.a;
  }
  return 0.0;
}

// Samples one grasp across the narrow direction of a part.
Grasp5D SampleGrasp(const Part& p, const ObjectPose& pose, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> plate(6.0, 9.0);
  const double jitter = 0.05 * unit(rng);
  const double margin = 6.0;
  const double part_angle = pose.angle + p.angle;
  switch (p.kind) {
    case PartKind::kBar: {
      const double t = 0.8 * p.a * unit(rng);
      const Point2 c = ToImage(pose, p, t, 0.0);
      return Grasp5D::Make(c.x, c.y, part_angle + kPi / 2 + jitter,
                           2.0 * p.b * pose.scale + margin, plate(rng));
    }
    case PartKind::kEllipse: {
      const double t = 0.7 * p.a * unit(rng);
      const double half = p.b * std::sqrt(1.0 - (t * t) / (p.a * p.a));
      const Point2 c = ToImage(pose, p, t, 0.0);
      return Grasp5D::Make(c.x, c.y, part_angle + kPi / 2 + jitter,
                           2.0 * half * pose.scale + margin, plate(rng));
    }
    case PartKind::kDisk: {
      const Point2 c = ToImage(pose, p, 0.1 * p.a * unit(rng),
                               0.1 * p.a * unit(rng));
      return Grasp5D::Make(c.x, c.y, kPi * (0.5 + 0.5 * unit(rng)),
                           2.0 * p.a * pose.scale + margin, plate(rng));
    }
    case PartKind::kRing:
    case PartKind::kArc: {
      const double mid = p.kind == PartKind::kRing ? 0.5 * (p.a + p.b) : p.a;
      const double thick = p.kind == PartKind::kRing ? p.a - p.b : 2.0 * p.b;
      const double psi =
          p.kind == PartKind::kRing ? kPi * unit(rng) : 0.85 * p.span * unit(rng);
      // Radial direction at psi in part-local coordinates is (sin, -cos).
      const double lu = mid * std::sin(psi), lv = -mid * std::cos(psi);
      const Point2 c = ToImage(pose, p, lu, lv);
      const double radial = part_angle + std::atan2(-std::cos(psi), std::sin(psi));
      return Grasp5D::Make(c.x, c.y, radial + jitter,
                           thick * pose.scale + margin, plate(rng));
    }
  }
  throw std::logic_error("unknown part kind");
}

struct Footprint {
  std::vector<std::uint8_t> mask;  // full canvas
  std::vector<std::int8_t> part;   // hit part per pixel, -1 outside
  int x1, y1, x2, y2;              // tight pixel bounds, inclusive
  bool inside_canvas;
};

Footprint Rasterize(int category, const ObjectPose& pose, int height,
                    int width) {
  const Recipe& recipe = Recipes()[category];
  Footprint f;
  f.mask.assign(static_cast<std::size_t>(height) * width, 0);
  f.part.assign(f.mask.size(), -1);
  f.x1 = width;
  f.y1 = height;
  f.x2 = -1;
  f.y2 = -1;
  const double reach = 0.75 * pose.scale;
  const int ylo = std::max(0, static_cast<int>(std::floor(pose.cy - reach)));
  const int yhi = std::min(height - 1, static_cast<int>(std::ceil(pose.cy + reach)));
  const int xlo = std::max(0, static_cast<int>(std::floor(pose.cx - reach)));
  const int xhi = std::min(width - 1, static_cast<int>(std::ceil(pose.cx + reach)));
  for (int y = ylo; y <= yhi; ++y) {
    for (int x = xlo; x <= xhi; ++x) {
      const int hit = HitPart(recipe, pose, x + 0.5, y + 0.5);
      if (hit < 0) continue;
      const std::size_t i = static_cast<std::size_t>(y) * width + x;
      f.mask[i] = 1;
      f.part[i] = static_cast<std::int8_t>(hit);
      f.x1 = std::min(f.x1, x);
      f.y1 = std::min(f.y1, y);
      f.x2 = std::max(f.x2, x);
      f.y2 = std::max(f.y2, y);
    }
  }
  // The scan window is clipped to the canvas, so touching an edge means the
  // shape may continue beyond it.
  f.inside_canvas = f.x2 >= 0 && f.x1 > 0 && f.y1 > 0 && f.x2 < width - 1 &&
                    f.y2 < height - 1;
  return f;
}

std::uint8_t Shade(std::uint8_t c, double factor) {
  return static_cast<std::uint8_t>(std::clamp(c * factor, 0.0, 255.0));
}

Rgb TextureColor(int category, const Part& part, const ObjectPose& pose,
                 double px, double py) {
  const CategoryInfo& info = CategoryRegistry()[category];
  Rgb base = part.accent ? info.accent : info.body;
  double lu, lv;
  ToPartLocal(pose, part, px, py, lu, lv);
  double factor = 1.0;
  switch (category) {
    case 0:  // speckles
      if (std::sin(37.0 * lu) * std::sin(41.0 * lv) > 0.8) base = info.accent;
      break;
    case 1: {  // dark tips
      const double psi = std::atan2(lu, -lv);
      if (std::abs(psi) > 0.85 * part.span) base = info.accent;
      break;
    }
    case 3:  // inner rim shading
      factor = 0.8 + 0.2 * (std::hypot(lu, lv) - part.b) / (part.a - part.b);
      break;
    case 5:
    case 7:  // ribbing along the part
      if (!part.accent) factor = 0.9 + 0.1 * std::cos(30.0 * lu);
      break;
    default:
      factor = 1.0 - 0.15 * std::abs(lv) / std::max(part.b, 1e-6);
      break;
  }
  return {Shade(base.r, factor), Shade(base.g, factor), Shade(base.b, factor)};
}

Box PixelBounds(const Footprint& f) {
  return Box::FromCorners(f.x1, f.y1, f.x2 + 1.0, f.y2 + 1.0);
}

}  // namespace

const std::vector<CategoryInfo>& CategoryRegistry() {
  static const std::vector<CategoryInfo> registry = {
      {"apple", {200, 35, 35}, {110, 20, 20}},
      {"banana", {235, 205, 50}, {110, 85, 30}},
      {"wrist developer", {135, 65, 175}, {230, 230, 230}},
      {"tape", {195, 155, 105}, {150, 110, 70}},
      {"toothpaste", {240, 240, 240}, {40, 90, 210}},
      {"wrench", {140, 145, 160}, {140, 145, 160}},
      {"pliers", {230, 110, 30}, {70, 70, 75}},
      {"screwdriver", {40, 165, 75}, {165, 165, 170}},
  };
  return registry;
}

int FindCategory(const std::string& name) {
  const auto& reg = CategoryRegistry();
  for (std::size_t i = 0; i < reg.size(); ++i) {
    if (reg[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

std::size_t Scene::NumGrasps() const {
  std::size_t n = 0;
  for (const auto& o : objects) n += o.grasps.size();
  return n;
}

void SceneConfig::Validate() const {
  auto fail = [](const std::string& what) {
    throw ConfigError("invalid scene config: " + what);
  };
  if (height < 64 || width < 64) fail("canvas must be at least 64x64");
  if (num_categories < 1 ||
      num_categories > static_cast<int>(CategoryRegistry().size())) {
    fail("num_categories must be in [1, " +
         std::to_string(CategoryRegistry().size()) + "]");
  }
  if (min_objects < 1 || max_objects < min_objects) {
    fail("object count range must satisfy 1 <= min_objects <= max_objects");
  }
  if (max_objects > num_categories) {
    fail("max_objects cannot exceed num_categories (categories are distinct "
         "within a scene)");
  }
  if (!(min_visibility >= 0.0 && min_visibility <= 1.0)) {
    fail("min_visibility must be in [0, 1]");
  }
  if (min_grasps < 1 || max_grasps < min_grasps) {
    fail("grasp count range must satisfy 1 <= min_grasps <= max_grasps");
  }
  if (!(min_scale > 4.0) || max_scale < min_scale) fail("bad scale range");
  if (max_scale > 0.9 * std::min(height, width)) {
    fail("max_scale too large for the canvas");
  }
  if (max_retries < 1) fail("max_retries must be >= 1");
}

SceneConfig SceneConfig::FromKeyValues(KeyValueConfig& kv) {
  SceneConfig c;
  c.height = static_cast<int>(kv.GetInt("height", c.height));
  c.width = static_cast<int>(kv.GetInt("width", c.width));
  c.num_categories =
      static_cast<int>(kv.GetInt("num_categories", c.num_categories));
  c.min_objects = static_cast<int>(kv.GetInt("min_objects", c.min_objects));
  c.max_objects = static_cast<int>(kv.GetInt("max_objects", c.max_objects));
  c.min_visibility = kv.GetDouble("min_visibility", c.min_visibility);
  c.min_grasps = static_cast<int>(kv.GetInt("min_grasps", c.min_grasps));
  c.max_grasps = static_cast<int>(kv.GetInt("max_grasps", c.max_grasps));
  c.min_scale = kv.GetDouble("min_scale", c.min_scale);
  c.max_scale = kv.GetDouble("max_scale", c.max_scale);
  c.max_retries = static_cast<int>(kv.GetInt("max_retries", c.max_retries));
  c.Validate();
  return c;
}

void SceneConfig::ToKeyValues(std::map<std::string, std::string>& out) const {
  out["height"] = std::to_string(height);
  out["width"] = std::to_string(width);
  out["num_categories"] = std::to_string(num_categories);
  out["min_objects"] = std::to_string(min_objects);
  out["max_objects"] = std::to_string(max_objects);
  out["min_visibility"] = FormatDouble(min_visibility);
  out["min_grasps"] = std::to_string(min_grasps);
  out["max_grasps"] = std::to_string(max_grasps);
  out["min_scale"] = FormatDouble(min_scale);
  out["max_scale"] = FormatDouble(max_scale);
  out["max_retries"] = std::to_string(max_retries);
}

std::vector<std::uint8_t> RasterizeObject(const SceneObject& object,
                                          int height, int width) {
  return Rasterize(object.category, object.pose, height, width).mask;
}

std::vector<int> OwnerMap(const Scene& scene) {
  const int h = scene.image.height, w = scene.image.width;
  std::vector<int> owner(static_cast<std::size_t>(h) * w, -1);
  std::vector<std::size_t> order(scene.objects.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    return scene.objects[a].depth_order < scene.objects[b].depth_order;
  });
  for (std::size_t i : order) {
    const auto mask = RasterizeObject(scene.objects[i], h, w);
    for (std::size_t p = 0; p < mask.size(); ++p) {
      if (mask[p]) owner[p] = static_cast<int>(i);
    }
  }
  return owner;
}

Scene GenerateScene(const SceneConfig& config, std::uint64_t seed) {
  config.Validate();
  std::mt19937_64 rng(seed);
  const int H = config.height, W = config.width;
  const std::size_t npix = static_cast<std::size_t>(H) * W;

  for (int attempt = 0; attempt < config.max_retries; ++attempt) {
    const int n = std::uniform_int_distribution<int>(config.min_objects,
                                                     config.max_objects)(rng);
    std::vector<int> cats(config.num_categories);
    std::iota(cats.begin(), cats.end(), 0);
    std::shuffle(cats.begin(), cats.end(), rng);

    std::vector<ObjectPose> poses;
    std::vector<Footprint> prints;
    std::vector<int> owner(npix, -1);
    bool ok = true;
    for (int i = 0; i < n && ok; ++i) {
      bool placed = false;
      for (int tries = 0; tries < 40 && !placed; ++tries) {
        ObjectPose pose;
        pose.scale = std::uniform_real_distribution<double>(
            config.min_scale, config.max_scale)(rng);
        pose.cx = std::uniform_real_distribution<double>(0.0, W)(rng);
        pose.cy = std::uniform_real_distribution<double>(0.0, H)(rng);
        pose.angle = std::uniform_real_distribution<double>(-kPi, kPi)(rng);
        Footprint f = Rasterize(cats[i], pose, H, W);
        if (!f.inside_canvas) continue;
        // Visibility of every earlier object once this one is on top.
        std::vector<long long> total(i + 1, 0), seen(i + 1, 0);
        for (std::size_t p = 0; p < npix; ++p) {
          const int top = f.mask[p] ? i : owner[p];
          if (top >= 0) ++seen[top];
        }
        for (int j = 0; j < i; ++j) {
          total[j] = std::count(prints[j].mask.begin(), prints[j].mask.end(), 1);
        }
        bool visible = true;
        for (int j = 0; j < i && visible; ++j) {
          visible = seen[j] >= config.min_visibility * total[j];
        }
        if (!visible) continue;
        for (std::size_t p = 0; p < npix; ++p) {
          if (f.mask[p]) owner[p] = i;
        }
        poses.push_back(pose);
        prints.push_back(std::move(f));
        placed = true;
      }
      ok = placed;
    }
    if (!ok) continue;

    Scene scene;
    scene.rng_seed = seed;
    scene.image = Image(H, W);
    for (int i = 0; i < n && ok; ++i) {
      SceneObject obj;
      obj.category = cats[i];
      obj.pose = poses[i];
      obj.depth_order = i;
      obj.bbox = PixelBounds(prints[i]);
      const long long total =
          std::count(prints[i].mask.begin(), prints[i].mask.end(), 1);
      const long long seen = std::count(owner.begin(), owner.end(), i);
      obj.visible_fraction = static_cast<double>(seen) / total;

      const Recipe& recipe = Recipes()[cats[i]];
      std::vector<double> weights;
      for (const Part& p : recipe) {
        weights.push_back(p.graspable ? PartLength(p) : 0.0);
      }
      std::discrete_distribution<int> pick(weights.begin(), weights.end());
      const int want = std::uniform_int_distribution<int>(
          config.min_grasps, config.max_grasps)(rng);
      for (int tries = 0; tries < 20 * want &&
                          static_cast<int>(obj.grasps.size()) < want;
           ++tries) {
        const Part& part = recipe[pick(rng)];
        const Grasp5D g = SampleGrasp(part, poses[i], rng);
        const int gx = static_cast<int>(std::floor(g.x));
        const int gy = static_cast<int>(std::floor(g.y));
        if (gx < 0 || gy < 0 || gx >= W || gy >= H) continue;
        if (owner[static_cast<std::size_t>(gy) * W + gx] != i) continue;
        obj.grasps.push_back(g);
      }
      if (static_cast<int>(obj.grasps.size()) < config.min_grasps) ok = false;
      scene.objects.push_back(std::move(obj));
    }
    if (!ok) continue;

    // Table with a soft gradient, then objects back to front, then sensor
    // noise.
    std::uniform_int_distribution<int> noise(-6, 6);
    const double phase = std::uniform_real_distribution<double>(0, 2 * kPi)(rng);
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const double f = 1.0 + 0.08 * std::sin(0.05 * x + 0.03 * y + phase);
        scene.image.Set(y, x, {Shade(kTable.r, f), Shade(kTable.g, f),
                               Shade(kTable.b, f)});
      }
    }
    for (int i = 0; i < n; ++i) {
      const Recipe& recipe = Recipes()[cats[i]];
      for (std::size_t p = 0; p < npix; ++p) {
        if (owner[p] != i) continue;
        const int y = static_cast<int>(p / W), x = static_cast<int>(p % W);
        const Part& part = recipe[prints[i].part[p]];
        scene.image.Set(y, x, TextureColor(cats[i], part, poses[i], x + 0.5, y + 0.5));
      }
    }
    for (auto& v : scene.image.pixels) {
      v = static_cast<std::uint8_t>(std::clamp(v + noise(rng), 0, 255));
    }
    return scene;
  }
  std::ostringstream msg;
  msg << "could not place " << config.min_objects << "-" << config.max_objects
      << " objects with min_visibility=" << config.min_visibility
      << " and >= " << config.min_grasps << " visible grasps each after "
      << config.max_retries << " attempts (seed " << seed << ")";
  throw PlacementError(msg.str());
}

DatasetSplit SplitDataset(std::size_t num_scenes, double train_fraction,
                          std::uint64_t seed) {
  if (num_scenes < 2) throw std::invalid_argument("need at least 2 scenes to split");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("train_fraction must be in (0, 1)");
  }
  std::vector<std::size_t> idx(num_scenes);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  long long n_train = std::llround(train_fraction * static_cast<double>(num_scenes));
  n_train = std::clamp<long long>(n_train, 1, static_cast<long long>(num_scenes) - 1);
  DatasetSplit split;
  split.train.assign(idx.begin(), idx.begin() + n_train);
  split.test.assign(idx.begin() + n_train, idx.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

namespace {
constexpr char kDatasetMagic[4] = {'C', 'G', 'D', 'S'};
}  // namespace

void SerializeDataset(const std::vector<Scene>& scenes,
                      const std::string& config_text, const std::string& path) {
  BinaryWriter w;
  w.PutBytes(std::string_view(kDatasetMagic, 4));
  w.Put<std::uint32_t>(kDatasetVersion);
  w.Put<std::uint32_t>(Crc32(config_text));
  w.PutString(config_text);
  w.Put<std::uint64_t>(scenes.size());
  for (const Scene& s : scenes) {
    w.Put<std::uint64_t>(s.rng_seed);
    w.Put<std::uint32_t>(s.image.height);
    w.Put<std::uint32_t>(s.image.width);
    w.PutString(Deflate(s.image.pixels));
    w.Put<std::uint32_t>(s.objects.size());
    for (const SceneObject& o : s.objects) {
      w.Put<std::int32_t>(o.category);
      for (double v : {o.bbox.cx, o.bbox.cy, o.bbox.w, o.bbox.h}) w.Put(v);
      for (double v : {o.pose.cx, o.pose.cy, o.pose.angle, o.pose.scale}) {
        w.Put(v);
      }
      w.Put<std::int32_t>(o.depth_order);
      w.Put(o.visible_fraction);
      w.Put<std::uint32_t>(o.grasps.size());
      for (const Grasp5D& g : o.grasps) {
        for (double v : {g.x, g.y, g.theta, g.w, g.h}) w.Put(v);
      }
    }
  }
  w.WriteFileWithChecksum(path);
}

SceneFile LoadDataset(const std::string& path) {
  BinaryReader r = BinaryReader::FromChecksummedFile(path);
  if (r.GetBytes(4) != std::string_view(kDatasetMagic, 4)) {
    throw CorruptFileError(path + ": not a scene dataset");
  }
  const auto version = r.Get<std::uint32_t>();
  if (version != kDatasetVersion) {
    throw VersionMismatchError(path + ": dataset version " +
                               std::to_string(version) + ", expected " +
                               std::to_string(kDatasetVersion));
  }
  const auto config_hash = r.Get<std::uint32_t>();
  SceneFile file;
  file.config_text = r.GetString();
  if (Crc32(file.config_text) != config_hash) {
    throw CorruptFileError(path + ": config hash mismatch");
  }
  const auto count = r.Get<std::uint64_t>();
  for (std::uint64_t i = 0; i < count; ++i) {
    Scene s;
    s.rng_seed = r.Get<std::uint64_t>();
    const int h = static_cast<int>(r.Get<std::uint32_t>());
    const int w = static_cast<int>(r.Get<std::uint32_t>());
    s.image.height = h;
    s.image.width = w;
    s.image.pixels = Inflate(r.GetString(), static_cast<std::size_t>(3) * h * w);
    const auto nobj = r.Get<std::uint32_t>();
    for (std::uint32_t j = 0; j < nobj; ++j) {
      SceneObject o;
      o.category = r.Get<std::int32_t>();
      o.bbox.cx = r.Get<double>();
      o.bbox.cy = r.Get<double>();
      o.bbox.w = r.Get<double>();
      o.bbox.h = r.Get<double>();
      o.pose.cx = r.Get<double>();
      o.pose.cy = r.Get<double>();
      o.pose.angle = r.Get<double>();
      o.pose.scale = r.Get<double>();
      o.depth_order = r.Get<std::int32_t>();
      o.visible_fraction = r.Get<double>();
      const auto ng = r.Get<std::uint32_t>();
      for (std::uint32_t k = 0; k < ng; ++k) {
        Grasp5D g;
        g.x = r.Get<double>();
        g.y = r.Get<double>();
        g.theta = r.Get<double>();
        g.w = r.Get<double>();
        g.h = r.Get<double>();
        o.grasps.push_back(g);
      }
      s.objects.push_back(std::move(o));
    }
    file.scenes.push_back(std::move(s));
  }
  if (!r.AtEnd()) throw CorruptFileError(path + ": trailing bytes");
  return file;
}

}  // namespace cgnet
