#include "propeval/evalengine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "propeval/error.hpp"
#include "propeval/maskops.hpp"
#include "propeval/parallel.hpp"

namespace propeval::eval {

namespace {

// numpy.spacing(1)
constexpr double kPrecisionGuard = std::numeric_limits<double>::epsilon();

void require_increasing(const std::vector<double>& v, const char* name) {
  if (v.empty()) throw FormatError(std::string(name) + " must not be empty");
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] > v[i - 1])) {
      throw FormatError(std::string(name) + " must be strictly increasing");
    }
  }
}

double overlap(const Geometry& dt, const GroundTruth& gt) {
  if (const auto* dbox = std::get_if<BBox>(&dt)) {
    const auto* gbox = std::get_if<BBox>(&gt.geometry);
    if (!gbox) throw FormatError("box detection compared with mask ground truth");
    return maskops::bbox_iou(*dbox, *gbox, gt.iscrowd);
  }
  const auto* gmask = std::get_if<RleMask>(&gt.geometry);
  if (!gmask) throw FormatError("mask detection compared with box ground truth");
  return maskops::mask_iou(std::get<RleMask>(dt), *gmask, gt.iscrowd);
}

bool score_order(const Detection& a, const Detection& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.seq < b.seq;
}

std::size_t find_index(const std::vector<double>& values, double wanted) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (std::abs(values[i] - wanted) < 1e-12) return i;
  }
  return values.size();
}

}  // namespace

EvalParams EvalParams::coco(Task task) {
  EvalParams p;
  p.task = task;
  // numpy.linspace(0.5, 0.95, 10) evaluates 0.9 one ulp low; keep that.
  p.iou_thresholds = {0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.8999999999999999, 0.95};
  p.recall_thresholds.resize(101);
  for (int i = 0; i < 101; ++i) p.recall_thresholds[i] = i * 0.01;
  p.recall_thresholds.back() = 1.0;
  p.area_ranges = {{"all", 0.0, 1e10},
                   {"small", 0.0, 32.0 * 32.0},
                   {"medium", 32.0 * 32.0, 96.0 * 96.0},
                   {"large", 96.0 * 96.0, 1e10}};
  p.max_dets = {1, 10, 100};
  return p;
}

void EvalParams::validate() const {
  require_increasing(iou_thresholds, "iou thresholds");
  if (iou_thresholds.front() <= 0 || iou_thresholds.back() > 1) {
    throw FormatError("iou thresholds must lie in (0, 1]");
  }
  require_increasing(recall_thresholds, "recall thresholds");
  if (recall_thresholds.front() != 0.0 || recall_thresholds.back() != 1.0) {
    throw FormatError("recall thresholds must span [0, 1]");
  }
  if (area_ranges.empty()) throw FormatError("area ranges must not be empty");
  if (max_dets.empty()) throw FormatError("maxDets must not be empty");
  for (std::size_t i = 0; i < max_dets.size(); ++i) {
    if (max_dets[i] <= 0 || (i > 0 && max_dets[i] <= max_dets[i - 1])) {
      throw FormatError("maxDets must be positive and strictly increasing");
    }
  }
}

IouMatrix compute_iou_matrix(std::span<const GroundTruth> gts,
                             std::span<const Detection> dts) {
  IouMatrix m;
  if (gts.empty() || dts.empty()) return m;
  m.rows = dts.size();
  m.cols = gts.size();
  m.values.resize(m.rows * m.cols);
  for (std::size_t d = 0; d < m.rows; ++d) {
    for (std::size_t g = 0; g < m.cols; ++g) {
      m.values[d * m.cols + g] = overlap(dts[d].geometry, gts[g]);
    }
  }
  return m;
}

ImgEval evaluate_image(std::span<const GroundTruth> gts, std::span<const Detection> dts,
                       const EvalParams& params, std::size_t area_index,
                       const IouMatrix& ious) {
  const AreaRange& range = params.area_ranges.at(area_index);
  const std::size_t num_gt = gts.size();
  const std::size_t num_dt = dts.size();
  const std::size_t num_thr = params.iou_thresholds.size();

  ImgEval ev;
  ev.area_index = area_index;
  if (!dts.empty()) {
    ev.image_id = dts.front().image_id;
    ev.category_id = dts.front().category_id;
  }

  std::vector<std::uint8_t> ignore(num_gt);
  for (std::size_t g = 0; g < num_gt; ++g) {
    ignore[g] = gts[g].iscrowd || !range.contains(gts[g].area);
  }
  ev.gt_order.resize(num_gt);
  std::iota(ev.gt_order.begin(), ev.gt_order.end(), std::size_t{0});
  std::stable_sort(ev.gt_order.begin(), ev.gt_order.end(),
                   [&](std::size_t a, std::size_t b) { return ignore[a] < ignore[b]; });
  ev.gt_ignore.resize(num_gt);
  for (std::size_t g = 0; g < num_gt; ++g) ev.gt_ignore[g] = ignore[ev.gt_order[g]];

  ev.dt_match.assign(num_thr * num_dt, -1);
  ev.dt_ignore.assign(num_thr * num_dt, 0);
  ev.dt_scores.resize(num_dt);
  for (std::size_t d = 0; d < num_dt; ++d) ev.dt_scores[d] = dts[d].score;

  std::vector<std::uint8_t> gt_taken(num_gt);
  for (std::size_t t = 0; t < num_thr; ++t) {
    std::fill(gt_taken.begin(), gt_taken.end(), std::uint8_t{0});
    const double threshold = std::min(params.iou_thresholds[t], 1.0 - 1e-10);
    for (std::size_t d = 0; d < num_dt; ++d) {
      double best = threshold;
      std::int64_t m = -1;
      for (std::size_t g = 0; g < num_gt; ++g) {
        const GroundTruth& gt = gts[ev.gt_order[g]];
        if (gt_taken[g] && !gt.iscrowd) continue;
        // Ground truth is ordered ignored-last: once a real match is held,
        // ignored candidates cannot replace it.
        if (m >= 0 && !ev.gt_ignore[m] && ev.gt_ignore[g]) break;
        const double iou = ious.at(d, ev.gt_order[g]);
        const bool candidate = m < 0 ? iou >= best : iou > best;
        if (!candidate) continue;
        best = iou;
        m = static_cast<std::int64_t>(g);
      }
      const std::size_t slot = t * num_dt + d;
      if (m >= 0) {
        ev.dt_match[slot] = m;
        ev.dt_ignore[slot] = ev.gt_ignore[m];
        gt_taken[m] = 1;
      } else if (!range.contains(dts[d].area)) {
        ev.dt_ignore[slot] = 1;
      }
    }
  }
  return ev;
}

EvalAccum accumulate(const EvalGrid& grid, const EvalParams& params) {
  EvalAccum acc;
  acc.params = params;
  acc.category_ids = grid.category_ids;
  const std::size_t T = acc.num_iou(), R = acc.num_rec(), K = acc.num_cat(),
                    A = acc.num_area(), M = acc.num_maxdet();
  acc.precision.assign(T * R * K * A * M, kSentinel);
  acc.recall.assign(T * K * A * M, kSentinel);

  struct Entry {
    const ImgEval* ev;
    std::size_t d;
    double score;
  };
  std::vector<Entry> entries;
  std::vector<std::size_t> order;
  std::vector<double> rc, pr;

  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t a = 0; a < A; ++a) {
      for (std::size_t m = 0; m < M; ++m) {
        const std::size_t max_det = static_cast<std::size_t>(params.max_dets[m]);
        entries.clear();
        std::int64_t npig = 0;
        bool any = false;
        for (std::size_t i = 0; i < grid.image_ids.size(); ++i) {
          const auto& cell = grid.cells[grid.index(k, a, i)];
          if (!cell) continue;
          any = true;
          const std::size_t n = std::min(cell->num_dets(), max_det);
          for (std::size_t d = 0; d < n; ++d) {
            entries.push_back({&*cell, d, cell->dt_scores[d]});
          }
          for (std::uint8_t ig : cell->gt_ignore) npig += ig ? 0 : 1;
        }
        if (!any || npig == 0) continue;

        order.resize(entries.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
          return entries[x].score > entries[y].score;
        });

        for (std::size_t t = 0; t < T; ++t) {
          rc.clear();
          pr.clear();
          std::int64_t tp = 0, fp = 0;
          for (std::size_t idx : order) {
            const Entry& e = entries[idx];
            // Ignored detections still emit a (repeated) curve point.
            if (!e.ev->ignored(t, e.d)) {
              if (e.ev->match(t, e.d) >= 0) {
                ++tp;
              } else {
                ++fp;
              }
            }
            const double tpd = static_cast<double>(tp);
            const double fpd = static_cast<double>(fp);
            rc.push_back(tpd / static_cast<double>(npig));
            pr.push_back(tpd / (fpd + tpd + kPrecisionGuard));
          }
          acc.recall_at(t, k, a, m) = rc.empty() ? 0.0 : rc.back();
          for (std::size_t i = pr.size(); i-- > 1;) {
            if (pr[i] > pr[i - 1]) pr[i - 1] = pr[i];
          }
          for (std::size_t r = 0; r < R; ++r) {
            const auto it = std::lower_bound(rc.begin(), rc.end(),
                                             params.recall_thresholds[r]);
            const auto pi = static_cast<std::size_t>(it - rc.begin());
            acc.precision_at(t, r, k, a, m) = pi < pr.size() ? pr[pi] : 0.0;
          }
        }
      }
    }
  }
  return acc;
}

namespace {

double mean_defined(const std::vector<double>& values) {
  double sum = 0.0;
  std::size_t n = 0;
  for (double v : values) {
    if (v > kSentinel) {
      sum += v;
      ++n;
    }
  }
  return n == 0 ? kSentinel : sum / static_cast<double>(n);
}

SummaryEntry summarize_one(const EvalAccum& acc, MetricKind kind, std::optional<double> iou,
                           const std::string& area_label, std::size_t maxdet_index) {
  SummaryEntry entry{kind, iou, area_label,
                     maxdet_index < acc.num_maxdet() ? acc.params.max_dets[maxdet_index] : 0,
                     kSentinel};
  std::size_t a = acc.num_area();
  for (std::size_t i = 0; i < acc.num_area(); ++i) {
    if (acc.params.area_ranges[i].label == area_label) a = i;
  }
  if (a == acc.num_area() || maxdet_index >= acc.num_maxdet()) return entry;

  std::vector<std::size_t> thresholds;
  if (iou) {
    const std::size_t t = find_index(acc.params.iou_thresholds, *iou);
    if (t == acc.num_iou()) return entry;
    thresholds.push_back(t);
  } else {
    thresholds.resize(acc.num_iou());
    std::iota(thresholds.begin(), thresholds.end(), std::size_t{0});
  }

  std::vector<double> values;
  for (std::size_t t : thresholds) {
    if (kind == MetricKind::kAP) {
      for (std::size_t r = 0; r < acc.num_rec(); ++r) {
        for (std::size_t k = 0; k < acc.num_cat(); ++k) {
          values.push_back(acc.precision_at(t, r, k, a, maxdet_index));
        }
      }
    } else {
      for (std::size_t k = 0; k < acc.num_cat(); ++k) {
        values.push_back(acc.recall_at(t, k, a, maxdet_index));
      }
    }
  }
  entry.value = mean_defined(values);
  return entry;
}

}  // namespace

SummaryTable summarize(const EvalAccum& accum) {
  const std::size_t last = accum.num_maxdet() == 0 ? 0 : accum.num_maxdet() - 1;
  using K = MetricKind;
  return {
      summarize_one(accum, K::kAP, std::nullopt, "all", last),
      summarize_one(accum, K::kAP, 0.5, "all", last),
      summarize_one(accum, K::kAP, 0.75, "all", last),
      summarize_one(accum, K::kAP, std::nullopt, "small", last),
      summarize_one(accum, K::kAP, std::nullopt, "medium", last),
      summarize_one(accum, K::kAP, std::nullopt, "large", last),
      summarize_one(accum, K::kAR, std::nullopt, "all", 0),
      summarize_one(accum, K::kAR, std::nullopt, "all", 1),
      summarize_one(accum, K::kAR, std::nullopt, "all", last),
      summarize_one(accum, K::kAR, std::nullopt, "small", last),
      summarize_one(accum, K::kAR, std::nullopt, "medium", last),
      summarize_one(accum, K::kAR, std::nullopt, "large", last),
  };
}

std::vector<double> per_category_ap(const EvalAccum& accum) {
  std::vector<double> out(accum.num_cat(), kSentinel);
  std::size_t a = 0;
  for (std::size_t i = 0; i < accum.num_area(); ++i) {
    if (accum.params.area_ranges[i].label == "all") a = i;
  }
  if (accum.num_maxdet() == 0) return out;
  const std::size_t m = accum.num_maxdet() - 1;
  std::vector<double> values;
  for (std::size_t k = 0; k < accum.num_cat(); ++k) {
    values.clear();
    for (std::size_t t = 0; t < accum.num_iou(); ++t) {
      for (std::size_t r = 0; r < accum.num_rec(); ++r) {
        values.push_back(accum.precision_at(t, r, k, a, m));
      }
    }
    out[k] = mean_defined(values);
  }
  return out;
}

Evaluation evaluate(const Dataset& dataset, std::span<const Detection> detections,
                    const EvalParams& params, int workers) {
  params.validate();
  Evaluation result;
  EvalGrid& grid = result.grid;
  grid.category_ids = dataset.sorted_category_ids();
  grid.image_ids = dataset.sorted_image_ids();
  grid.num_areas = params.area_ranges.size();
  grid.cells.resize(grid.category_ids.size() * grid.num_areas * grid.image_ids.size());

  std::map<std::pair<Id, Id>, std::vector<Detection>> grouped;
  for (const Detection& d : detections) {
    if (!dataset.has_image(d.image_id)) {
      throw IntegrityError("detection references unknown image_id " +
                           std::to_string(d.image_id));
    }
    const bool is_box = std::holds_alternative<BBox>(d.geometry);
    if (is_box != (params.task == Task::kBox)) {
      throw FormatError(std::string("detection geometry does not match the ") +
                        task_name(params.task) + " task");
    }
    if (!dataset.has_category(d.category_id)) continue;
    grouped[{d.image_id, d.category_id}].push_back(d);
  }

  const std::size_t max_det = static_cast<std::size_t>(params.max_det());
  parallel_for(grid.image_ids.size(), workers, [&](std::size_t i) {
    const Id image_id = grid.image_ids[i];
    const Image& image = dataset.image(image_id);
    for (std::size_t k = 0; k < grid.category_ids.size(); ++k) {
      const Id cat = grid.category_ids[k];
      std::vector<GroundTruth> gts;
      for (std::size_t idx : dataset.annotations_of(image_id, cat)) {
        const Annotation& a = dataset.annotations()[idx];
        GroundTruth gt{a.id, a.bbox, a.area, a.iscrowd};
        if (params.task == Task::kMask) {
          gt.geometry = maskops::segmentation_to_rle(a.segmentation, image.height, image.width);
        }
        gts.push_back(std::move(gt));
      }
      std::vector<Detection> dts;
      if (auto it = grouped.find({image_id, cat}); it != grouped.end()) dts = it->second;
      if (gts.empty() && dts.empty()) continue;
      std::stable_sort(dts.begin(), dts.end(), score_order);
      if (dts.size() > max_det) dts.resize(max_det);

      const IouMatrix ious = compute_iou_matrix(gts, dts);
      for (std::size_t a = 0; a < grid.num_areas; ++a) {
        ImgEval ev = evaluate_image(gts, dts, params, a, ious);
        ev.image_id = image_id;
        ev.category_id = cat;
        grid.cells[grid.index(k, a, i)] = std::move(ev);
      }
    }
  });

  result.accum = accumulate(grid, params);
  result.summary = summarize(result.accum);
  return result;
}

}  // namespace propeval::eval
