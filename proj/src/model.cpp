#include "propeval/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <unordered_set>

#include "propeval/error.hpp"
#include "propeval/maskops.hpp"

namespace propeval {

const char* task_name(Task task) { return task == Task::kBox ? "box" : "mask"; }

Task parse_task(const std::string& name) {
  if (name == "box" || name == "bbox") return Task::kBox;
  if (name == "mask" || name == "segm") return Task::kMask;
  throw FormatError("unknown task '" + name + "' (expected box or mask)");
}

namespace {

const Json& field(const Json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) throw ParseError(path + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(path + "." + key + ": missing field");
  return *it;
}

double as_number(const Json& node, const std::string& path) {
  if (!node.is_number()) throw ParseError(path + ": expected a number");
  const double v = node.get<double>();
  if (!std::isfinite(v)) throw ParseError(path + ": not finite");
  return v;
}

Id as_id(const Json& node, const std::string& path) {
  if (node.is_number_integer()) return node.get<Id>();
  if (node.is_number_float()) {
    const double v = node.get<double>();
    if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 9.0e15) {
      return static_cast<Id>(v);
    }
  }
  throw ParseError(path + ": expected an integer identifier");
}

std::uint32_t as_dimension(const Json& node, const std::string& path) {
  const Id v = as_id(node, path);
  if (v < 0 || v > std::numeric_limits<std::uint32_t>::max()) {
    throw ParseError(path + ": dimension out of range");
  }
  return static_cast<std::uint32_t>(v);
}

bool as_flag(const Json& node, const std::string& path) {
  if (node.is_boolean()) return node.get<bool>();
  return as_id(node, path) != 0;
}

const Json& array_field(const Json& doc, const char* key, const std::string& path) {
  const Json& arr = field(doc, key, path);
  if (!arr.is_array()) throw ParseError(path + "." + key + ": expected an array");
  return arr;
}

std::string at(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

}  // namespace

Image parse_image(const Json& node, const std::string& path) {
  return Image{as_id(field(node, "id", path), path + ".id"),
               as_dimension(field(node, "width", path), path + ".width"),
               as_dimension(field(node, "height", path), path + ".height")};
}

Category parse_category(const Json& node, const std::string& path) {
  Category cat{as_id(field(node, "id", path), path + ".id"), {}};
  if (auto it = node.find("name"); it != node.end() && it->is_string()) {
    cat.name = it->get<std::string>();
  }
  return cat;
}

BBox parse_bbox(const Json& node, const std::string& path) {
  if (!node.is_array() || node.size() != 4) {
    throw ParseError(path + ": expected [x, y, w, h]");
  }
  BBox box{as_number(node[0], path + "[0]"), as_number(node[1], path + "[1]"),
           as_number(node[2], path + "[2]"), as_number(node[3], path + "[3]")};
  if (box.w < 0 || box.h < 0) {
    throw FormatError(path + ": negative box width or height");
  }
  return box;
}

Segmentation parse_segmentation(const Json& node, const std::string& path) {
  if (node.is_array()) {
    Polygons polys;
    for (std::size_t i = 0; i < node.size(); ++i) {
      const Json& ring = node[i];
      const std::string rpath = at(path, i);
      if (!ring.is_array()) throw ParseError(rpath + ": expected a coordinate list");
      std::vector<double> coords;
      coords.reserve(ring.size());
      for (std::size_t k = 0; k < ring.size(); ++k) {
        coords.push_back(as_number(ring[k], at(rpath, k)));
      }
      if (coords.size() < 6 || coords.size() % 2 != 0) {
        throw FormatError(rpath + ": polygon needs an even number of >= 6 coordinates, got " +
                          std::to_string(coords.size()));
      }
      polys.rings.push_back(std::move(coords));
    }
    return polys;
  }
  if (!node.is_object()) throw ParseError(path + ": expected polygons or RLE object");
  const Json& size = field(node, "size", path);
  if (!size.is_array() || size.size() != 2) {
    throw ParseError(path + ".size: expected [height, width]");
  }
  const std::uint32_t h = as_dimension(size[0], path + ".size[0]");
  const std::uint32_t w = as_dimension(size[1], path + ".size[1]");
  const Json& counts = field(node, "counts", path);
  if (counts.is_string()) {
    RleString str{h, w, counts.get<std::string>()};
    try {
      maskops::check_rle(maskops::rle_string_decode(str.counts, h, w));
    } catch (const CodecError& e) {
      throw CodecError(path + ".counts: " + e.what());
    }
    return str;
  }
  if (!counts.is_array()) throw ParseError(path + ".counts: expected list or string");
  RleMask rle{h, w, {}};
  rle.counts.reserve(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const Id c = as_id(counts[i], at(path + ".counts", i));
    if (c < 0) {
      throw CodecError(at(path + ".counts", i) + ": negative run count " +
                       std::to_string(c));
    }
    if (c > std::numeric_limits<std::uint32_t>::max()) {
      throw CodecError(at(path + ".counts", i) + ": run count too large");
    }
    rle.counts.push_back(static_cast<std::uint32_t>(c));
  }
  try {
    maskops::check_rle(rle);
  } catch (const CodecError& e) {
    throw CodecError(path + ".counts: " + e.what());
  }
  return RleCounts{std::move(rle)};
}

Annotation parse_annotation(const Json& node, const std::string& path) {
  Annotation ann;
  ann.id = as_id(field(node, "id", path), path + ".id");
  ann.image_id = as_id(field(node, "image_id", path), path + ".image_id");
  ann.category_id = as_id(field(node, "category_id", path), path + ".category_id");
  ann.bbox = parse_bbox(field(node, "bbox", path), path + ".bbox");
  if (auto it = node.find("segmentation"); it != node.end()) {
    ann.segmentation = parse_segmentation(*it, path + ".segmentation");
  }
  ann.area = as_number(field(node, "area", path), path + ".area");
  if (ann.area < 0) throw FormatError(path + ".area: negative area");
  if (auto it = node.find("iscrowd"); it != node.end()) {
    ann.iscrowd = as_flag(*it, path + ".iscrowd");
  }
  if (ann.iscrowd && !is_rle(ann.segmentation)) {
    throw FormatError(path + ".segmentation: crowd annotation must use RLE");
  }
  return ann;
}

Dataset::Dataset(std::vector<Image> images, std::vector<Annotation> annotations,
                 std::vector<Category> categories)
    : images_(std::move(images)),
      annotations_(std::move(annotations)),
      categories_(std::move(categories)) {
  for (std::size_t i = 0; i < images_.size(); ++i) {
    if (!image_index_.emplace(images_[i].id, i).second) {
      throw IntegrityError("duplicate image id " + std::to_string(images_[i].id));
    }
  }
  for (std::size_t i = 0; i < categories_.size(); ++i) {
    if (!category_index_.emplace(categories_[i].id, i).second) {
      throw IntegrityError("duplicate category id " +
                           std::to_string(categories_[i].id));
    }
  }
  std::unordered_set<Id> seen;
  for (std::size_t i = 0; i < annotations_.size(); ++i) {
    const Annotation& a = annotations_[i];
    if (!seen.insert(a.id).second) {
      throw IntegrityError("duplicate annotation id " + std::to_string(a.id));
    }
    if (!has_image(a.image_id)) {
      throw IntegrityError("annotation " + std::to_string(a.id) +
                           " references unknown image_id " +
                           std::to_string(a.image_id));
    }
    if (!has_category(a.category_id)) {
      throw IntegrityError("annotation " + std::to_string(a.id) +
                           " references unknown category_id " +
                           std::to_string(a.category_id));
    }
    by_image_category_[{a.image_id, a.category_id}].push_back(i);
    by_image_[a.image_id].push_back(i);
  }
}

const Image& Dataset::image(Id id) const {
  auto it = image_index_.find(id);
  if (it == image_index_.end()) {
    throw IntegrityError("unknown image_id " + std::to_string(id));
  }
  return images_[it->second];
}

std::span<const std::size_t> Dataset::annotations_of(Id image_id,
                                                     Id category_id) const {
  auto it = by_image_category_.find({image_id, category_id});
  if (it == by_image_category_.end()) return {};
  return it->second;
}

std::span<const std::size_t> Dataset::annotations_of_image(Id image_id) const {
  auto it = by_image_.find(image_id);
  if (it == by_image_.end()) return {};
  return it->second;
}

std::vector<Id> Dataset::sorted_image_ids() const {
  std::vector<Id> ids;
  ids.reserve(images_.size());
  for (const auto& im : images_) ids.push_back(im.id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<Id> Dataset::sorted_category_ids() const {
  std::vector<Id> ids;
  ids.reserve(categories_.size());
  for (const auto& c : categories_) ids.push_back(c.id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

Dataset load_dataset(const Json& doc, const WarningSink& warn) {
  if (!doc.is_object()) throw ParseError("$: expected an object");
  const Json& jimages = array_field(doc, "images", "$");
  const Json& janns = array_field(doc, "annotations", "$");
  const Json& jcats = array_field(doc, "categories", "$");

  std::vector<Image> images;
  images.reserve(jimages.size());
  for (std::size_t i = 0; i < jimages.size(); ++i) {
    images.push_back(parse_image(jimages[i], at("$.images", i)));
  }
  std::vector<Category> categories;
  categories.reserve(jcats.size());
  for (std::size_t i = 0; i < jcats.size(); ++i) {
    categories.push_back(parse_category(jcats[i], at("$.categories", i)));
  }
  std::vector<Annotation> annotations;
  annotations.reserve(janns.size());
  for (std::size_t i = 0; i < janns.size(); ++i) {
    annotations.push_back(parse_annotation(janns[i], at("$.annotations", i)));
    if (warn && annotations.back().area == 0) {
      warn("annotation " + std::to_string(annotations.back().id) + " has zero area");
    }
  }
  return Dataset(std::move(images), std::move(annotations), std::move(categories));
}

std::vector<Detection> load_detections(const Json& doc, const Dataset& dataset,
                                       Task task) {
  if (!doc.is_array()) throw ParseError("$: expected an array of results");
  std::vector<Detection> out;
  out.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const Json& rec = doc[i];
    const std::string path = at("$", i);
    Detection det;
    det.image_id = as_id(field(rec, "image_id", path), path + ".image_id");
    det.category_id = as_id(field(rec, "category_id", path), path + ".category_id");
    det.score = as_number(field(rec, "score", path), path + ".score");
    det.seq = static_cast<std::int64_t>(i);
    const Image& image = dataset.image(det.image_id);
    if (task == Task::kBox) {
      auto it = rec.find("bbox");
      if (it == rec.end()) throw FormatError(path + ": missing bbox for box task");
      BBox box = parse_bbox(*it, path + ".bbox");
      det.area = box.area();
      det.geometry = box;
    } else {
      auto it = rec.find("segmentation");
      if (it == rec.end()) {
        throw FormatError(path + ": missing segmentation for mask task");
      }
      RleMask rle = maskops::segmentation_to_rle(
          parse_segmentation(*it, path + ".segmentation"), image.height, image.width);
      det.area = static_cast<double>(maskops::rle_area(rle));
      det.geometry = std::move(rle);
    }
    out.push_back(std::move(det));
  }
  return out;
}

Json to_json(const BBox& box) { return Json::array({box.x, box.y, box.w, box.h}); }

Json to_json(const Segmentation& seg) {
  if (const auto* poly = std::get_if<Polygons>(&seg)) {
    Json out = Json::array();
    for (const auto& ring : poly->rings) out.push_back(ring);
    return out;
  }
  if (const auto* counts = std::get_if<RleCounts>(&seg)) {
    return Json{{"size", {counts->mask.height, counts->mask.width}},
                {"counts", counts->mask.counts}};
  }
  const auto& str = std::get<RleString>(seg);
  return Json{{"size", {str.height, str.width}}, {"counts", str.counts}};
}

Json to_json(const Dataset& dataset) {
  Json images = Json::array();
  for (const auto& im : dataset.images()) {
    images.push_back({{"id", im.id}, {"width", im.width}, {"height", im.height}});
  }
  Json anns = Json::array();
  for (const auto& a : dataset.annotations()) {
    anns.push_back({{"id", a.id},
                    {"image_id", a.image_id},
                    {"category_id", a.category_id},
                    {"bbox", to_json(a.bbox)},
                    {"segmentation", to_json(a.segmentation)},
                    {"area", a.area},
                    {"iscrowd", a.iscrowd ? 1 : 0}});
  }
  Json cats = Json::array();
  for (const auto& c : dataset.categories()) {
    cats.push_back({{"id", c.id}, {"name", c.name}});
  }
  return Json{{"images", std::move(images)},
              {"annotations", std::move(anns)},
              {"categories", std::move(cats)}};
}

Json to_json(std::span<const Detection> detections) {
  Json out = Json::array();
  for (const auto& d : detections) {
    Json rec{{"image_id", d.image_id}, {"category_id", d.category_id}, {"score", d.score}};
    if (const auto* box = std::get_if<BBox>(&d.geometry)) {
      rec["bbox"] = to_json(*box);
    } else {
      const auto& rle = std::get<RleMask>(d.geometry);
      rec["segmentation"] = Json{{"size", {rle.height, rle.width}},
                                 {"counts", maskops::rle_string_encode(rle)}};
    }
    out.push_back(std::move(rec));
  }
  return out;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open file");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace propeval
