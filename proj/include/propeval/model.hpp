#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

#include "propeval/types.hpp"

namespace propeval {

using Json = nlohmann::json;

struct Image {
  Id id = 0;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  friend bool operator==(const Image&, const Image&) = default;
};

struct Category {
  Id id = 0;
  std::string name;
  friend bool operator==(const Category&, const Category&) = default;
};

struct Annotation {
  Id id = 0;
  Id image_id = 0;
  Id category_id = 0;
  BBox bbox;
  Segmentation segmentation;
  // Segment area as stored in the file; drives size bucketing.
  double area = 0.0;
  bool iscrowd = false;
  friend bool operator==(const Annotation&, const Annotation&) = default;
};

using Geometry = std::variant<BBox, RleMask>;

struct Detection {
  Id image_id = 0;
  Id category_id = 0;
  Geometry geometry;
  double score = 0.0;
  // Insertion index; breaks score ties.
  std::int64_t seq = 0;
  // w*h for boxes, foreground pixel count for masks.
  double area = 0.0;
  friend bool operator==(const Detection&, const Detection&) = default;
};

// Receives non-fatal observations (zero-area annotations, ...).
using WarningSink = std::function<void(const std::string&)>;

// Immutable, validated ground truth with lookup indexes. Safe for
// concurrent reads.
class Dataset {
 public:
  Dataset() = default;
  // Throws IntegrityError on duplicate ids or dangling references.
  Dataset(std::vector<Image> images, std::vector<Annotation> annotations,
          std::vector<Category> categories);

  const std::vector<Image>& images() const { return images_; }
  const std::vector<Annotation>& annotations() const { return annotations_; }
  const std::vector<Category>& categories() const { return categories_; }

  bool has_image(Id id) const { return image_index_.contains(id); }
  bool has_category(Id id) const { return category_index_.contains(id); }
  // Throws IntegrityError for unknown ids.
  const Image& image(Id id) const;

  // Indexes into annotations(), in file order.
  std::span<const std::size_t> annotations_of(Id image_id, Id category_id) const;
  std::span<const std::size_t> annotations_of_image(Id image_id) const;

  std::vector<Id> sorted_image_ids() const;
  std::vector<Id> sorted_category_ids() const;

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.images_ == b.images_ && a.annotations_ == b.annotations_ &&
           a.categories_ == b.categories_;
  }

 private:
  std::vector<Image> images_;
  std::vector<Annotation> annotations_;
  std::vector<Category> categories_;
  std::unordered_map<Id, std::size_t> image_index_;
  std::unordered_map<Id, std::size_t> category_index_;
  std::map<std::pair<Id, Id>, std::vector<std::size_t>> by_image_category_;
  std::unordered_map<Id, std::vector<std::size_t>> by_image_;
};

// Record-level parsers shared by the loaders and the validator. `path` is
// the JSON path used in error messages.
Image parse_image(const Json& node, const std::string& path);
Category parse_category(const Json& node, const std::string& path);
BBox parse_bbox(const Json& node, const std::string& path);
Segmentation parse_segmentation(const Json& node, const std::string& path);
Annotation parse_annotation(const Json& node, const std::string& path);

Dataset load_dataset(const Json& doc, const WarningSink& warn = {});

// Results document: flat array of {image_id, category_id, score, bbox |
// segmentation}. seq is the record index.
std::vector<Detection> load_detections(const Json& doc, const Dataset& dataset,
                                       Task task);

Json to_json(const BBox& box);
Json to_json(const Segmentation& seg);
Json to_json(const Dataset& dataset);
// Masks are written as compressed-string RLE.
Json to_json(std::span<const Detection> detections);

// Reads and parses a JSON file; I/O failures and syntax errors raise
// ParseError naming the file.
Json read_json_file(const std::string& path);

}  // namespace propeval
