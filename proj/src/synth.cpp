#include "propeval/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "propeval/maskops.hpp"

namespace propeval {

namespace {

using Rng = std::mt19937_64;

int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

double uniform_real(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

struct SynthObject {
  BBox bbox;
  Segmentation segmentation;
  RleMask mask;
};

struct SizeClass {
  int lo;
  int hi;
};

// Side lengths for small / medium / large objects.
constexpr SizeClass kClasses[] = {{4, 30}, {34, 90}, {100, 300}};

SizeClass fit_class(int wanted, int max_side) {
  for (int c = wanted; c >= 0; --c) {
    if (kClasses[c].lo <= max_side) {
      return {kClasses[c].lo, std::min(kClasses[c].hi, max_side)};
    }
  }
  return {1, max_side};
}

SynthObject make_rect(Rng& rng, std::uint32_t width, std::uint32_t height, SizeClass size) {
  const int w = uniform_int(rng, size.lo, size.hi);
  const int h = uniform_int(rng, size.lo, size.hi);
  const int x = uniform_int(rng, 0, static_cast<int>(width) - w);
  const int y = uniform_int(rng, 0, static_cast<int>(height) - h);
  Polygons poly{{{double(x), double(y), double(x + w), double(y), double(x + w),
                  double(y + h), double(x), double(y + h)}}};
  RleMask mask = maskops::polygons_to_rle(poly, height, width);
  return {BBox{double(x), double(y), double(w), double(h)}, std::move(poly), std::move(mask)};
}

SynthObject make_star(Rng& rng, std::uint32_t width, std::uint32_t height, SizeClass size) {
  const int side = uniform_int(rng, size.lo, size.hi);
  const double radius = side / 2.0;
  const double cx = uniform_real(rng, radius, width - radius);
  const double cy = uniform_real(rng, radius, height - radius);
  const int n = uniform_int(rng, 5, 9);
  std::vector<double> angles(n);
  for (double& a : angles) a = uniform_real(rng, 0.0, 2.0 * std::numbers::pi);
  std::sort(angles.begin(), angles.end());
  std::vector<double> ring;
  for (double a : angles) {
    const double r = radius * uniform_real(rng, 0.4, 1.0);
    ring.push_back(round2(cx + r * std::cos(a)));
    ring.push_back(round2(cy + r * std::sin(a)));
  }
  Polygons poly{{std::move(ring)}};
  RleMask mask = maskops::polygons_to_rle(poly, height, width);
  if (maskops::rle_area(mask) == 0) return make_rect(rng, width, height, size);
  return {maskops::rle_to_bbox(mask), std::move(poly), std::move(mask)};
}

// Union of a few ellipses; usually several runs per column.
SynthObject make_blob(Rng& rng, std::uint32_t width, std::uint32_t height, SizeClass size) {
  const int side = uniform_int(rng, size.lo, size.hi);
  const int x0 = uniform_int(rng, 0, static_cast<int>(width) - side);
  const int y0 = uniform_int(rng, 0, static_cast<int>(height) - side);
  BitMask bits(height, width);
  const int blobs = uniform_int(rng, 2, 4);
  for (int b = 0; b < blobs; ++b) {
    const double rx = side * uniform_real(rng, 0.15, 0.5);
    const double ry = side * uniform_real(rng, 0.15, 0.5);
    const double cx = b == 0 ? x0 + side / 2.0 : uniform_real(rng, x0 + rx, x0 + side - rx);
    const double cy = b == 0 ? y0 + side / 2.0 : uniform_real(rng, y0 + ry, y0 + side - ry);
    for (int c = x0; c < x0 + side; ++c) {
      for (int r = y0; r < y0 + side; ++r) {
        const double dx = (c + 0.5 - cx) / rx;
        const double dy = (r + 0.5 - cy) / ry;
        if (dx * dx + dy * dy <= 1.0) bits.set(r, c);
      }
    }
  }
  RleMask mask = maskops::rle_encode(bits);
  if (maskops::rle_area(mask) == 0) return make_rect(rng, width, height, size);
  return {maskops::rle_to_bbox(mask), RleCounts{mask}, mask};
}

RleMask translate(const RleMask& mask, int dx, int dy) {
  const BitMask src = maskops::rle_decode(mask);
  BitMask dst(mask.height, mask.width);
  for (std::uint32_t c = 0; c < mask.width; ++c) {
    for (std::uint32_t r = 0; r < mask.height; ++r) {
      if (!src.get(r, c)) continue;
      const long long nc = static_cast<long long>(c) + dx;
      const long long nr = static_cast<long long>(r) + dy;
      if (nc >= 0 && nr >= 0 && nc < mask.width && nr < mask.height) {
        dst.set(static_cast<std::uint32_t>(nr), static_cast<std::uint32_t>(nc));
      }
    }
  }
  return maskops::rle_encode(dst);
}

Json proposal_record(Id image_id, const RleMask& mask) {
  return Json{{"image_id", image_id},
              {"bbox", to_json(maskops::rle_to_bbox(mask))},
              {"segmentation",
               {{"size", {mask.height, mask.width}},
                {"counts", maskops::rle_string_encode(mask)}}}};
}

}  // namespace

SynthOutput synthesize(const SynthConfig& config) {
  Rng rng(config.seed);
  const int num_categories =
      config.categories > 0 ? config.categories : std::max(config.objects_per_image, 1);

  Json images = Json::array();
  Json annotations = Json::array();
  Json categories = Json::array();
  Json proposals = Json::array();
  for (int k = 1; k <= num_categories; ++k) {
    categories.push_back({{"id", k}, {"name", "category_" + std::to_string(k)}});
  }

  Id next_ann = 1;
  int object_index = 0;
  for (int i = 0; i < config.images; ++i) {
    const Id image_id = i + 1;
    const auto width = static_cast<std::uint32_t>(uniform_int(rng, 64, 640));
    const auto height = static_cast<std::uint32_t>(uniform_int(rng, 64, 640));
    images.push_back({{"id", image_id}, {"width", width}, {"height", height}});

    std::vector<int> cats(num_categories);
    std::iota(cats.begin(), cats.end(), 1);
    std::shuffle(cats.begin(), cats.end(), rng);

    Json image_props = Json::array();
    for (int j = 0; j < config.objects_per_image; ++j, ++object_index) {
      const SizeClass size =
          fit_class(object_index % 3, static_cast<int>(std::min(width, height)));
      SynthObject obj;
      switch (uniform_int(rng, 0, 2)) {
        case 0: obj = make_rect(rng, width, height, size); break;
        case 1: obj = make_star(rng, width, height, size); break;
        default: obj = make_blob(rng, width, height, size); break;
      }
      const int category = config.categories > 0 && config.categories < config.objects_per_image
                               ? uniform_int(rng, 1, num_categories)
                               : cats[j % num_categories];
      annotations.push_back({{"id", next_ann++},
                             {"image_id", image_id},
                             {"category_id", category},
                             {"bbox", to_json(obj.bbox)},
                             {"segmentation", to_json(obj.segmentation)},
                             {"area", static_cast<double>(maskops::rle_area(obj.mask))},
                             {"iscrowd", 0}});

      Json exact = proposal_record(image_id, obj.mask);
      exact["bbox"] = to_json(obj.bbox);
      image_props.push_back(std::move(exact));
      if (config.jitter > 0) {
        for (int c = 0; c < config.jittered_copies; ++c) {
          const int dx = static_cast<int>(
              std::lround(uniform_real(rng, -config.jitter, config.jitter) * obj.bbox.w));
          const int dy = static_cast<int>(
              std::lround(uniform_real(rng, -config.jitter, config.jitter) * obj.bbox.h));
          RleMask moved = translate(obj.mask, dx, dy);
          if (maskops::rle_area(moved) > 0) image_props.push_back(proposal_record(image_id, moved));
        }
      }
    }
    for (int d = 0; d < config.distractors; ++d) {
      const int w = uniform_int(rng, 4, static_cast<int>(width) / 2);
      const int h = uniform_int(rng, 4, static_cast<int>(height) / 2);
      const BBox box{double(uniform_int(rng, 0, static_cast<int>(width) - w)),
                     double(uniform_int(rng, 0, static_cast<int>(height) - h)), double(w),
                     double(h)};
      image_props.push_back(proposal_record(image_id, maskops::bbox_to_rle(box, height, width)));
    }
    std::vector<std::size_t> order(image_props.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t idx : order) proposals.push_back(image_props[idx]);
  }

  return SynthOutput{Json{{"images", std::move(images)},
                          {"annotations", std::move(annotations)},
                          {"categories", std::move(categories)}},
                     std::move(proposals)};
}

}  // namespace propeval
