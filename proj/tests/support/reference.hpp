#pragma once

// Test-only oracles. Nothing here calls into the code paths it is used to
// check: masks are compared pixel by pixel, polygons are rasterized point
// by point and the evaluator below rebuilds every precision/recall point
// from scratch.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "propeval/evalengine.hpp"
#include "propeval/model.hpp"
#include "propeval/types.hpp"

namespace propeval::testkit {

inline BitMask random_mask(std::mt19937_64& rng, std::uint32_t h, std::uint32_t w,
                           double density) {
  BitMask m(h, w);
  std::bernoulli_distribution on(density);
  for (std::uint32_t r = 0; r < h; ++r) {
    for (std::uint32_t c = 0; c < w; ++c) m.set(r, c, on(rng));
  }
  return m;
}

// Random mask built from a few rectangles so that runs are long.
inline BitMask random_blocky_mask(std::mt19937_64& rng, std::uint32_t h, std::uint32_t w) {
  BitMask m(h, w);
  std::uniform_int_distribution<int> nblocks(0, 4);
  const int n = nblocks(rng);
  for (int b = 0; b < n; ++b) {
    std::uniform_int_distribution<std::uint32_t> rr(0, h - 1), cc(0, w - 1);
    std::uint32_t r0 = rr(rng), r1 = rr(rng), c0 = cc(rng), c1 = cc(rng);
    if (r0 > r1) std::swap(r0, r1);
    if (c0 > c1) std::swap(c0, c1);
    for (std::uint32_t r = r0; r <= r1; ++r) {
      for (std::uint32_t c = c0; c <= c1; ++c) m.set(r, c);
    }
  }
  return m;
}

inline std::uint64_t pixel_count(const BitMask& m) {
  std::uint64_t n = 0;
  for (std::uint32_t r = 0; r < m.height(); ++r) {
    for (std::uint32_t c = 0; c < m.width(); ++c) n += m.get(r, c) ? 1 : 0;
  }
  return n;
}

inline double brute_iou(const BitMask& dt, const BitMask& gt, bool crowd) {
  std::uint64_t inter = 0, uni = 0, dt_area = 0;
  for (std::uint32_t r = 0; r < dt.height(); ++r) {
    for (std::uint32_t c = 0; c < dt.width(); ++c) {
      const bool a = dt.get(r, c), b = gt.get(r, c);
      inter += (a && b) ? 1 : 0;
      uni += (a || b) ? 1 : 0;
      dt_area += a ? 1 : 0;
    }
  }
  const std::uint64_t denom = crowd ? dt_area : uni;
  return denom == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(denom);
}

// Classic crossing-number test.
inline bool point_in_ring(const std::vector<double>& ring, double px, double py) {
  bool inside = false;
  const std::size_t n = ring.size() / 2;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const double xi = ring[2 * i], yi = ring[2 * i + 1];
    const double xj = ring[2 * j], yj = ring[2 * j + 1];
    if ((yi > py) != (yj > py) && px < (xj - xi) * (py - yi) / (yj - yi) + xi) {
      inside = !inside;
    }
  }
  return inside;
}

inline BitMask brute_rasterize(const Polygons& polys, std::uint32_t h, std::uint32_t w) {
  BitMask m(h, w);
  for (std::uint32_t r = 0; r < h; ++r) {
    for (std::uint32_t c = 0; c < w; ++c) {
      for (const auto& ring : polys.rings) {
        if (point_in_ring(ring, c + 0.5, r + 0.5)) {
          m.set(r, c);
          break;
        }
      }
    }
  }
  return m;
}

// Area estimate from `factor` x `factor` samples per pixel.
inline double supersampled_area(const std::vector<double>& ring, std::uint32_t h,
                                std::uint32_t w, int factor) {
  std::uint64_t hits = 0;
  const double step = 1.0 / factor;
  for (std::uint32_t r = 0; r < h; ++r) {
    for (int sr = 0; sr < factor; ++sr) {
      const double py = r + (sr + 0.5) * step;
      for (std::uint32_t c = 0; c < w; ++c) {
        for (int sc = 0; sc < factor; ++sc) {
          if (point_in_ring(ring, c + (sc + 0.5) * step, py)) ++hits;
        }
      }
    }
  }
  return static_cast<double>(hits) / (factor * factor);
}

inline double shoelace_area(const std::vector<double>& ring) {
  double s = 0.0;
  const std::size_t n = ring.size() / 2;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    s += ring[2 * j] * ring[2 * i + 1] - ring[2 * i] * ring[2 * j + 1];
  }
  return std::abs(s) / 2.0;
}

// Simple star-shaped ring around (cx, cy): one vertex per angular sector,
// convex or concave depending on the radii.
inline std::vector<double> random_star(std::mt19937_64& rng, double cx, double cy,
                                       double rmin, double rmax, int vertices) {
  std::uniform_real_distribution<double> jitter(0.1, 0.9);
  std::uniform_real_distribution<double> rad(rmin, rmax);
  std::vector<double> ring;
  for (int i = 0; i < vertices; ++i) {
    const double a = 6.283185307179586 * (i + jitter(rng)) / vertices;
    const double r = rad(rng);
    ring.push_back(cx + r * std::cos(a));
    ring.push_back(cy + r * std::sin(a));
  }
  return ring;
}

// Box overlap written out independently of maskops.
inline double naive_box_iou(const BBox& d, const BBox& g, bool crowd) {
  const double x0 = std::max(d.x, g.x), x1 = std::min(d.x + d.w, g.x + g.w);
  const double y0 = std::max(d.y, g.y), y1 = std::min(d.y + d.h, g.y + g.h);
  if (x1 <= x0 || y1 <= y0) return 0.0;
  const double inter = (x1 - x0) * (y1 - y0);
  const double denom = crowd ? d.w * d.h : d.w * d.h + g.w * g.h - inter;
  return denom <= 0 ? 0.0 : inter / denom;
}

struct NaiveTensors {
  std::vector<double> precision;  // [t][r][k][a][m]
  std::vector<double> recall;     // [t][k][a][m]
};

// Exhaustive box-task evaluator: for every (category, area, budget,
// threshold) it re-runs matching with only the budgeted detections, lists
// every precision/recall point and reads precision at recall >= r as the
// maximum over all qualifying points.
inline NaiveTensors naive_evaluate(const Dataset& ds, const std::vector<Detection>& dets,
                                   const eval::EvalParams& p) {
  const auto cats = ds.sorted_category_ids();
  const auto imgs = ds.sorted_image_ids();
  const std::size_t T = p.iou_thresholds.size(), R = p.recall_thresholds.size(),
                    K = cats.size(), A = p.area_ranges.size(), M = p.max_dets.size();
  NaiveTensors out;
  out.precision.assign(T * R * K * A * M, -1.0);
  out.recall.assign(T * K * A * M, -1.0);

  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t a = 0; a < A; ++a) {
      const auto& rng = p.area_ranges[a];
      auto in_range = [&](double area) { return area >= rng.lo && area <= rng.hi; };
      for (std::size_t m = 0; m < M; ++m) {
        for (std::size_t t = 0; t < T; ++t) {
          struct Point {
            double score;
            int state;  // 1 tp, 0 fp, -1 ignored
          };
          std::vector<Point> points;
          long npig = 0;
          for (Id img : imgs) {
            std::vector<Annotation> gts;
            for (const auto& ann : ds.annotations()) {
              if (ann.image_id == img && ann.category_id == cats[k]) gts.push_back(ann);
            }
            std::vector<Detection> dts;
            for (const auto& d : dets) {
              if (d.image_id == img && d.category_id == cats[k]) dts.push_back(d);
            }
            // Selection sort by (score desc, seq asc).
            for (std::size_t i = 0; i < dts.size(); ++i) {
              std::size_t best = i;
              for (std::size_t j = i + 1; j < dts.size(); ++j) {
                if (dts[j].score > dts[best].score ||
                    (dts[j].score == dts[best].score && dts[j].seq < dts[best].seq)) {
                  best = j;
                }
              }
              std::swap(dts[i], dts[best]);
            }
            if (dts.size() > static_cast<std::size_t>(p.max_dets[m])) {
              dts.resize(static_cast<std::size_t>(p.max_dets[m]));
            }
            std::vector<const Annotation*> ordered;
            std::vector<bool> ig;
            for (int pass = 0; pass < 2; ++pass) {
              for (const auto& g : gts) {
                const bool ignore = g.iscrowd || !in_range(g.area);
                if (ignore == (pass == 1)) {
                  ordered.push_back(&g);
                  ig.push_back(ignore);
                }
              }
            }
            for (bool b : ig) npig += b ? 0 : 1;
            std::vector<bool> taken(ordered.size(), false);
            const double thr = std::min(p.iou_thresholds[t], 1.0 - 1e-10);
            for (const auto& d : dts) {
              const BBox& db = std::get<BBox>(d.geometry);
              long match = -1;
              double best = thr;
              for (std::size_t g = 0; g < ordered.size(); ++g) {
                if (taken[g] && !ordered[g]->iscrowd) continue;
                if (match >= 0 && !ig[match] && ig[g]) break;
                const double v = naive_box_iou(db, ordered[g]->bbox, ordered[g]->iscrowd);
                if (match < 0 ? v >= best : v > best) {
                  best = v;
                  match = static_cast<long>(g);
                }
              }
              int state;
              if (match >= 0) {
                taken[match] = true;
                state = ig[match] ? -1 : 1;
              } else {
                state = in_range(d.area) ? 0 : -1;
              }
              points.push_back({d.score, state});
            }
          }
          if (npig == 0) continue;
          std::stable_sort(points.begin(), points.end(),
                           [](const Point& x, const Point& y) { return x.score > y.score; });
          std::vector<double> rc, pr;
          double tp = 0, fp = 0;
          for (const auto& pt : points) {
            if (pt.state == 1) tp += 1;
            if (pt.state == 0) fp += 1;
            rc.push_back(tp / static_cast<double>(npig));
            pr.push_back(tp / (fp + tp + 2.220446049250313e-16));
          }
          const std::size_t ri = ((t * K + k) * A + a) * M + m;
          out.recall[ri] = rc.empty() ? 0.0 : rc.back();
          for (std::size_t r = 0; r < R; ++r) {
            double best = 0.0;
            bool found = false;
            for (std::size_t i = 0; i < rc.size(); ++i) {
              if (rc[i] >= p.recall_thresholds[r]) {
                best = found ? std::max(best, pr[i]) : pr[i];
                found = true;
              }
            }
            out.precision[(((t * R + r) * K + k) * A + a) * M + m] = found ? best : 0.0;
          }
        }
      }
    }
  }
  return out;
}

// Tiny box-task dataset: <= 3 images, <= 2 categories, <= 4 objects, a
// handful of detections near the objects with coarse (tie-prone) scores.
struct TinyCase {
  Dataset dataset;
  std::vector<Detection> detections;
};

inline TinyCase random_tiny_case(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> n_img(1, 3), n_cat(1, 2), n_obj(0, 4), n_det(0, 8);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int images = n_img(rng), cats = n_cat(rng), objects = n_obj(rng), ndet = n_det(rng);
  std::vector<Image> ims;
  for (int i = 0; i < images; ++i) ims.push_back({i + 1, 200, 200});
  std::vector<Category> cs;
  for (int k = 0; k < cats; ++k) cs.push_back({(k + 1) * 10, "c" + std::to_string(k)});
  auto rand_box = [&] {
    std::uniform_int_distribution<int> pos(0, 120), side(5, 120);
    return BBox{double(pos(rng)), double(pos(rng)), double(side(rng)), double(side(rng))};
  };
  std::vector<Annotation> anns;
  for (int o = 0; o < objects; ++o) {
    Annotation a;
    a.id = o + 1;
    a.image_id = std::uniform_int_distribution<int>(1, images)(rng);
    a.category_id = cs[std::uniform_int_distribution<int>(0, cats - 1)(rng)].id;
    a.bbox = rand_box();
    // Stored area is independent of the box, spanning all size buckets.
    a.area = std::uniform_int_distribution<int>(0, 3)(rng) == 0 ? 1024.0
                                                                : a.bbox.w * a.bbox.h * unit(rng);
    a.iscrowd = unit(rng) < 0.15;
    a.segmentation = RleCounts{RleMask{200, 200, {40000}}};
    anns.push_back(a);
  }
  std::vector<Detection> dets;
  for (int d = 0; d < ndet; ++d) {
    Detection det;
    det.seq = d;
    if (!anns.empty() && unit(rng) < 0.7) {
      const auto& src = anns[std::uniform_int_distribution<std::size_t>(0, anns.size() - 1)(rng)];
      std::uniform_int_distribution<int> jit(-12, 12);
      BBox b = src.bbox;
      b.x += jit(rng);
      b.y += jit(rng);
      b.w = std::max(1.0, b.w + jit(rng));
      b.h = std::max(1.0, b.h + jit(rng));
      det.image_id = src.image_id;
      det.category_id = unit(rng) < 0.8 ? src.category_id : cs[0].id;
      det.geometry = b;
      det.area = b.w * b.h;
    } else {
      const BBox b = rand_box();
      det.image_id = std::uniform_int_distribution<int>(1, images)(rng);
      det.category_id = cs[std::uniform_int_distribution<int>(0, cats - 1)(rng)].id;
      det.geometry = b;
      det.area = b.w * b.h;
    }
    det.score = std::uniform_int_distribution<int>(1, 5)(rng) / 5.0;
    dets.push_back(det);
  }
  return {Dataset(std::move(ims), std::move(anns), std::move(cs)), std::move(dets)};
}

}  // namespace propeval::testkit
