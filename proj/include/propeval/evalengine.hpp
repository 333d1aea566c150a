#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "propeval/model.hpp"

// COCO-style detection evaluation: per-image greedy matching over a sweep of
// IoU thresholds, accumulation into precision/recall tensors and the
// 12-number summary.
namespace propeval::eval {

struct AreaRange {
  std::string label;
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double area) const { return area >= lo && area <= hi; }
};

struct EvalParams {
  Task task = Task::kBox;
  std::vector<double> iou_thresholds;
  std::vector<double> recall_thresholds;
  std::vector<AreaRange> area_ranges;
  std::vector<int> max_dets;

  // IoU 0.50:0.05:0.95, 101 recall points, all/small/medium/large areas,
  // maxDets 1/10/100. The grids match numpy.linspace bit for bit.
  static EvalParams coco(Task task);

  // Throws FormatError when a grid is empty or not strictly increasing.
  void validate() const;

  int max_det() const { return max_dets.empty() ? 0 : max_dets.back(); }
};

// Ground truth prepared for one (image, category) cell.
struct GroundTruth {
  Id id = 0;
  Geometry geometry;
  double area = 0.0;
  bool iscrowd = false;
};

// Row-major [detection x ground truth].
struct IouMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
  double at(std::size_t d, std::size_t g) const { return values[d * cols + g]; }
};

// Detections must already be sorted by (score desc, seq asc) and truncated.
// Entry (d, g) uses crowd semantics when gts[g].iscrowd.
IouMatrix compute_iou_matrix(std::span<const GroundTruth> gts,
                             std::span<const Detection> dts);

struct ImgEval {
  Id image_id = 0;
  Id category_id = 0;
  std::size_t area_index = 0;
  // Ground-truth order after moving ignored entries last (stable).
  std::vector<std::size_t> gt_order;
  std::vector<std::uint8_t> gt_ignore;
  // [threshold][detection]: index into gt_order or -1; ignore flag.
  std::vector<std::int64_t> dt_match;
  std::vector<std::uint8_t> dt_ignore;
  std::vector<double> dt_scores;

  std::size_t num_dets() const { return dt_scores.size(); }
  std::int64_t match(std::size_t t, std::size_t d) const {
    return dt_match[t * num_dets() + d];
  }
  bool ignored(std::size_t t, std::size_t d) const {
    return dt_ignore[t * num_dets() + d] != 0;
  }
};

ImgEval evaluate_image(std::span<const GroundTruth> gts, std::span<const Detection> dts,
                       const EvalParams& params, std::size_t area_index,
                       const IouMatrix& ious);

// Per-image results laid out [category][area][image]; empty cells had
// neither detections nor ground truth.
struct EvalGrid {
  std::vector<Id> category_ids;
  std::vector<Id> image_ids;
  std::size_t num_areas = 0;
  std::vector<std::optional<ImgEval>> cells;

  std::size_t index(std::size_t k, std::size_t a, std::size_t i) const {
    return (k * num_areas + a) * image_ids.size() + i;
  }
};

inline constexpr double kSentinel = -1.0;

struct EvalAccum {
  EvalParams params;
  std::vector<Id> category_ids;
  // [iou][recall][category][area][maxDets]
  std::vector<double> precision;
  // [iou][category][area][maxDets]
  std::vector<double> recall;

  std::size_t num_iou() const { return params.iou_thresholds.size(); }
  std::size_t num_rec() const { return params.recall_thresholds.size(); }
  std::size_t num_cat() const { return category_ids.size(); }
  std::size_t num_area() const { return params.area_ranges.size(); }
  std::size_t num_maxdet() const { return params.max_dets.size(); }

  double& precision_at(std::size_t t, std::size_t r, std::size_t k, std::size_t a,
                       std::size_t m) {
    return precision[(((t * num_rec() + r) * num_cat() + k) * num_area() + a) *
                         num_maxdet() + m];
  }
  double precision_at(std::size_t t, std::size_t r, std::size_t k, std::size_t a,
                      std::size_t m) const {
    return precision[(((t * num_rec() + r) * num_cat() + k) * num_area() + a) *
                         num_maxdet() + m];
  }
  double& recall_at(std::size_t t, std::size_t k, std::size_t a, std::size_t m) {
    return recall[((t * num_cat() + k) * num_area() + a) * num_maxdet() + m];
  }
  double recall_at(std::size_t t, std::size_t k, std::size_t a, std::size_t m) const {
    return recall[((t * num_cat() + k) * num_area() + a) * num_maxdet() + m];
  }
};

EvalAccum accumulate(const EvalGrid& grid, const EvalParams& params);

enum class MetricKind { kAP, kAR };

struct SummaryEntry {
  MetricKind kind = MetricKind::kAP;
  // Unset means the full threshold range.
  std::optional<double> iou;
  std::string area_label;
  int max_dets = 0;
  double value = kSentinel;
};

using SummaryTable = std::vector<SummaryEntry>;

// The 12 rows in the standard order; row 0 (AP over all thresholds, all
// areas, 100 detections) is the ranking metric.
SummaryTable summarize(const EvalAccum& accum);

// Mean precision per category over all thresholds at area "all" and the
// largest detection budget; kSentinel where undefined.
std::vector<double> per_category_ap(const EvalAccum& accum);

struct Evaluation {
  EvalGrid grid;
  EvalAccum accum;
  SummaryTable summary;
};

// Runs the whole protocol. Detections referencing unknown images raise
// IntegrityError; detections of categories absent from the dataset are not
// evaluated. Output is identical for any worker count.
Evaluation evaluate(const Dataset& dataset, std::span<const Detection> detections,
                    const EvalParams& params, int workers = 1);

}  // namespace propeval::eval
