#include "propeval/validate.hpp"

#include <cmath>
#include <map>
#include <set>

#include "propeval/error.hpp"
#include "propeval/maskops.hpp"

namespace propeval {

namespace {

std::string at(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

// "annotation 17: " when the record carries a readable id.
std::string record_label(const Json& rec, const char* kind) {
  if (rec.is_object()) {
    auto it = rec.find("id");
    if (it != rec.end() && it->is_number_integer()) {
      return std::string(kind) + " " + std::to_string(it->get<Id>()) + ": ";
    }
  }
  return std::string(kind) + ": ";
}

class Collector {
 public:
  void add(std::string path, std::string message) {
    out_.push_back({std::move(path), std::move(message)});
  }

  // Runs fn, turning any library error into a violation.
  template <typename Fn>
  bool guard(const std::string& path, const std::string& prefix, Fn&& fn) {
    try {
      fn();
      return true;
    } catch (const Error& e) {
      add(path, prefix + e.what());
      return false;
    } catch (const Json::exception& e) {
      add(path, prefix + e.what());
      return false;
    }
  }

  std::vector<Violation> take() && { return std::move(out_); }

 private:
  std::vector<Violation> out_;
};

const Json* array_member(const Json& doc, const char* key, Collector& c) {
  auto it = doc.find(key);
  if (it == doc.end()) {
    c.add(std::string("$.") + key, "missing array");
    return nullptr;
  }
  if (!it->is_array()) {
    c.add(std::string("$.") + key, "expected an array");
    return nullptr;
  }
  return &*it;
}

void check_segmentation_size(const Segmentation& seg, const Image& image) {
  if (is_rle(seg)) maskops::segmentation_to_rle(seg, image.height, image.width);
}

void validate_ground_truth(const Json& doc, Collector& c) {
  if (!doc.is_object()) {
    c.add("$", "ground truth must be an object");
    return;
  }
  std::map<Id, Image> images;
  std::set<Id> categories, annotation_ids;
  if (const Json* arr = array_member(doc, "images", c)) {
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const std::string path = at("$.images", i);
      c.guard(path, record_label((*arr)[i], "image"), [&] {
        Image im = parse_image((*arr)[i], path);
        if (!images.emplace(im.id, im).second) {
          throw IntegrityError("duplicate image id " + std::to_string(im.id));
        }
      });
    }
  }
  if (const Json* arr = array_member(doc, "categories", c)) {
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const std::string path = at("$.categories", i);
      c.guard(path, record_label((*arr)[i], "category"), [&] {
        const Category cat = parse_category((*arr)[i], path);
        if (!categories.insert(cat.id).second) {
          throw IntegrityError("duplicate category id " + std::to_string(cat.id));
        }
      });
    }
  }
  if (const Json* arr = array_member(doc, "annotations", c)) {
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const std::string path = at("$.annotations", i);
      c.guard(path, record_label((*arr)[i], "annotation"), [&] {
        const Annotation a = parse_annotation((*arr)[i], path);
        if (!annotation_ids.insert(a.id).second) {
          throw IntegrityError("duplicate annotation id " + std::to_string(a.id));
        }
        if (!categories.contains(a.category_id)) {
          throw IntegrityError("unknown category_id " + std::to_string(a.category_id));
        }
        auto im = images.find(a.image_id);
        if (im == images.end()) {
          throw IntegrityError("unknown image_id " + std::to_string(a.image_id));
        }
        check_segmentation_size(a.segmentation, im->second);
      });
    }
  }
}

void validate_records(const Json& doc, bool results, const Dataset* gt, Collector& c) {
  if (!doc.is_array()) {
    c.add("$", "expected an array of records");
    return;
  }
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const Json& rec = doc[i];
    const std::string path = at("$", i);
    c.guard(path, results ? "result: " : "proposal: ", [&] {
      if (!rec.is_object()) throw ParseError(path + ": expected an object");
      auto image_it = rec.find("image_id");
      if (image_it == rec.end() || !image_it->is_number_integer()) {
        throw ParseError(path + ".image_id: missing or not an integer");
      }
      const Id image_id = image_it->get<Id>();
      const Image* image = nullptr;
      if (gt) image = &gt->image(image_id);
      if (results) {
        auto cat = rec.find("category_id");
        if (cat == rec.end() || !cat->is_number_integer()) {
          throw ParseError(path + ".category_id: missing or not an integer");
        }
        auto score = rec.find("score");
        if (score == rec.end() || !score->is_number() ||
            !std::isfinite(score->get<double>())) {
          throw ParseError(path + ".score: missing or not a finite number");
        }
      }
      bool has_geometry = false;
      if (auto it = rec.find("bbox"); it != rec.end()) {
        parse_bbox(*it, path + ".bbox");
        has_geometry = true;
      }
      if (auto it = rec.find("segmentation"); it != rec.end()) {
        const Segmentation seg = parse_segmentation(*it, path + ".segmentation");
        if (image) check_segmentation_size(seg, *image);
        has_geometry = true;
      }
      if (!has_geometry) throw FormatError(path + ": record has neither bbox nor segmentation");
    });
  }
}

}  // namespace

DocumentKind detect_kind(const Json& doc) {
  if (doc.is_object()) return DocumentKind::kGroundTruth;
  if (doc.is_array() && !doc.empty() && doc.front().is_object() &&
      doc.front().contains("score")) {
    return DocumentKind::kResults;
  }
  return DocumentKind::kProposals;
}

std::vector<Violation> validate_document(const Json& doc, DocumentKind kind,
                                         const Dataset* ground_truth) {
  Collector c;
  switch (kind) {
    case DocumentKind::kGroundTruth: validate_ground_truth(doc, c); break;
    case DocumentKind::kResults: validate_records(doc, true, ground_truth, c); break;
    case DocumentKind::kProposals: validate_records(doc, false, ground_truth, c); break;
  }
  return std::move(c).take();
}

}  // namespace propeval
