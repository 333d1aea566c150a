#include "propeval/oracle.hpp"

#include <algorithm>
#include <limits>

#include "propeval/error.hpp"
#include "propeval/maskops.hpp"
#include "propeval/parallel.hpp"

namespace propeval::oracle {

namespace {

std::string record_path(std::size_t i) { return "$[" + std::to_string(i) + "]"; }

Id record_image_id(const Json& rec, const std::string& path) {
  auto it = rec.find("image_id");
  if (it == rec.end()) throw ParseError(path + ".image_id: missing field");
  if (!it->is_number_integer()) throw ParseError(path + ".image_id: expected an integer");
  return it->get<Id>();
}

BBox proposal_box(const Proposal& p, const Image& image) {
  if (p.box) return *p.box;
  if (p.segmentation) {
    return maskops::rle_to_bbox(
        maskops::segmentation_to_rle(*p.segmentation, image.height, image.width));
  }
  throw FormatError("proposal without geometry");
}

RleMask proposal_mask(const Proposal& p, const Image& image) {
  if (!p.segmentation) {
    throw FormatError("mask task needs proposal segmentations (image " +
                      std::to_string(image.id) + ")");
  }
  return maskops::segmentation_to_rle(*p.segmentation, image.height, image.width);
}

template <typename G, typename IouFn>
std::size_t best_overlap(const G& target, const std::vector<G>& candidates,
                         IouFn&& iou) {
  std::size_t best = 0;
  double best_iou = -1.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double v = iou(candidates[i], target);
    if (v > best_iou) {
      best_iou = v;
      best = i;
    }
  }
  return best;
}

std::vector<Detection> select_for_image(const Dataset& dataset, const Image& image,
                                        const std::vector<Proposal>& props,
                                        Task task, bool skip_crowd) {
  std::vector<const Annotation*> targets;
  for (std::size_t idx : dataset.annotations_of_image(image.id)) {
    const Annotation& a = dataset.annotations()[idx];
    if (skip_crowd && a.iscrowd) continue;
    targets.push_back(&a);
  }
  std::sort(targets.begin(), targets.end(),
            [](const Annotation* l, const Annotation* r) { return l->id < r->id; });
  std::vector<Detection> out;
  if (targets.empty() || props.empty()) return out;
  out.reserve(targets.size());

  if (task == Task::kBox) {
    std::vector<BBox> boxes;
    boxes.reserve(props.size());
    for (const auto& p : props) boxes.push_back(proposal_box(p, image));
    for (const Annotation* a : targets) {
      const std::size_t k = best_overlap(a->bbox, boxes, [](const BBox& d, const BBox& g) {
        return maskops::bbox_iou(d, g, false);
      });
      out.push_back(Detection{image.id, a->category_id, boxes[k], 1.0, 0, boxes[k].area()});
    }
  } else {
    std::vector<RleMask> masks;
    masks.reserve(props.size());
    for (const auto& p : props) masks.push_back(proposal_mask(p, image));
    for (const Annotation* a : targets) {
      const RleMask gt =
          maskops::segmentation_to_rle(a->segmentation, image.height, image.width);
      const std::size_t k = best_overlap(gt, masks, [](const RleMask& d, const RleMask& g) {
        return maskops::mask_iou(d, g, false);
      });
      out.push_back(Detection{image.id, a->category_id, masks[k], 1.0, 0,
                              static_cast<double>(maskops::rle_area(masks[k]))});
    }
  }
  return out;
}

}  // namespace

ProposalSet load_proposals(const Json& doc, const Dataset* dataset) {
  if (!doc.is_array()) throw ParseError("$: expected an array of proposals");
  ProposalSet set;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const Json& rec = doc[i];
    const std::string path = record_path(i);
    if (!rec.is_object()) throw ParseError(path + ": expected an object");
    const Id image_id = record_image_id(rec, path);
    const Image* image = nullptr;
    if (dataset) {
      if (!dataset->has_image(image_id)) {
        throw IntegrityError(path + ".image_id: unknown image_id " +
                             std::to_string(image_id));
      }
      image = &dataset->image(image_id);
    }
    Proposal p;
    p.rank = static_cast<std::int64_t>(i);
    if (auto it = rec.find("rank"); it != rec.end()) {
      if (!it->is_number_integer()) throw ParseError(path + ".rank: expected an integer");
      p.rank = it->get<std::int64_t>();
    }
    if (auto it = rec.find("bbox"); it != rec.end()) {
      p.box = parse_bbox(*it, path + ".bbox");
    }
    if (auto it = rec.find("segmentation"); it != rec.end()) {
      Segmentation seg = parse_segmentation(*it, path + ".segmentation");
      if (std::holds_alternative<Polygons>(seg)) {
        if (!image) {
          throw FormatError(path + ".segmentation: polygons need ground truth image sizes");
        }
        seg = RleCounts{maskops::polygons_to_rle(std::get<Polygons>(seg), image->height,
                                                 image->width)};
      }
      p.segmentation = std::move(seg);
    }
    if (!p.box && !p.segmentation) {
      throw FormatError(path + ": proposal needs bbox or segmentation");
    }
    set.images[image_id].push_back(std::move(p));
  }
  for (auto& [id, props] : set.images) {
    std::stable_sort(props.begin(), props.end(),
                     [](const Proposal& a, const Proposal& b) { return a.rank < b.rank; });
  }
  return set;
}

void truncate_proposals(ProposalSet& proposals, std::size_t limit) {
  for (auto& [id, props] : proposals.images) {
    if (props.size() > limit) props.resize(limit);
  }
}

ProposalStats proposal_stats(const ProposalSet& proposals) {
  ProposalStats stats;
  if (proposals.images.empty()) return stats;
  stats.min = std::numeric_limits<std::size_t>::max();
  for (const auto& [id, props] : proposals.images) {
    ++stats.image_count;
    stats.total += props.size();
    stats.min = std::min(stats.min, props.size());
    stats.max = std::max(stats.max, props.size());
  }
  stats.mean_per_image =
      static_cast<double>(stats.total) / static_cast<double>(stats.image_count);
  return stats;
}

std::vector<Detection> oracle_select(const Dataset& dataset,
                                     const ProposalSet& proposals, Task task,
                                     const OracleOptions& options) {
  for (const auto& [id, props] : proposals.images) {
    if (!dataset.has_image(id)) {
      throw IntegrityError("proposals reference unknown image_id " + std::to_string(id));
    }
  }
  const std::vector<Id> image_ids = dataset.sorted_image_ids();
  std::vector<std::vector<Detection>> per_image(image_ids.size());
  parallel_for(image_ids.size(), options.workers, [&](std::size_t i) {
    auto it = proposals.images.find(image_ids[i]);
    if (it == proposals.images.end()) return;
    per_image[i] = select_for_image(dataset, dataset.image(image_ids[i]), it->second,
                                    task, options.skip_crowd);
  });
  std::vector<Detection> out;
  for (auto& dets : per_image) {
    for (auto& d : dets) {
      d.seq = static_cast<std::int64_t>(out.size());
      out.push_back(std::move(d));
    }
  }
  return out;
}

}  // namespace propeval::oracle
