#include "propeval/maskops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "propeval/error.hpp"

namespace propeval::maskops {

namespace {

// Appends runs while keeping the counts canonical: zero-length runs are
// dropped and consecutive runs of the same value are coalesced.
class CountsBuilder {
 public:
  void push(std::uint64_t length, bool foreground) {
    if (length == 0) return;
    if (counts_.empty() && foreground) counts_.push_back(0);
    const bool last_fg = (counts_.size() % 2) == 0;
    if (!counts_.empty() && last_fg == foreground) {
      counts_.back() += static_cast<std::uint32_t>(length);
    } else {
      counts_.push_back(static_cast<std::uint32_t>(length));
    }
  }

  std::vector<std::uint32_t> finish() && {
    if (counts_.empty()) counts_.push_back(0);
    return std::move(counts_);
  }

 private:
  std::vector<std::uint32_t> counts_;
};

std::uint64_t counts_sum(const std::vector<std::uint32_t>& counts) {
  std::uint64_t sum = 0;
  for (std::uint32_t c : counts) sum += c;
  return sum;
}

// Cursor over the runs of one mask, skipping zero-length runs.
class RunCursor {
 public:
  explicit RunCursor(const RleMask& rle) : counts_(rle.counts) { advance(); }

  std::uint64_t remaining() const { return remaining_; }
  bool foreground() const { return (index_ % 2) == 1; }

  void consume(std::uint64_t n) {
    remaining_ -= n;
    if (remaining_ == 0) {
      ++index_;
      advance();
    }
  }

 private:
  void advance() {
    while (index_ < counts_.size() && counts_[index_] == 0) ++index_;
    remaining_ = index_ < counts_.size() ? counts_[index_] : 0;
  }

  const std::vector<std::uint32_t>& counts_;
  std::size_t index_ = 0;
  std::uint64_t remaining_ = 0;
};

void require_same_size(const RleMask& a, const RleMask& b) {
  if (a.height != b.height || a.width != b.width) {
    throw DimensionError("mask size mismatch: " + std::to_string(a.height) +
                         "x" + std::to_string(a.width) + " vs " +
                         std::to_string(b.height) + "x" +
                         std::to_string(b.width));
  }
}

// Smallest integer c with c + 0.5 >= x, i.e. the first pixel whose center
// lies at or right of x.
double first_center_at_or_after(double x) {
  double c = std::ceil(x - 0.5);
  while (c + 0.5 < x) c += 1.0;
  while (c - 0.5 >= x) c -= 1.0;
  return c;
}

// Calls fn(length, a_fg, b_fg) for every maximal segment over which both
// masks are constant. Both masks must already pass check_rle.
template <typename Fn>
void walk_pair(const RleMask& a, const RleMask& b, Fn&& fn) {
  RunCursor ca(a);
  RunCursor cb(b);
  while (ca.remaining() > 0 && cb.remaining() > 0) {
    const std::uint64_t n = std::min(ca.remaining(), cb.remaining());
    fn(n, ca.foreground(), cb.foreground());
    ca.consume(n);
    cb.consume(n);
  }
}

}  // namespace

void check_rle(const RleMask& rle) {
  const std::uint64_t sum = counts_sum(rle.counts);
  if (sum != rle.pixel_count()) {
    throw CodecError("run counts sum to " + std::to_string(sum) +
                     " but mask has " + std::to_string(rle.pixel_count()) +
                     " pixels");
  }
}

bool is_canonical(const RleMask& rle) {
  for (std::size_t i = 1; i < rle.counts.size(); ++i) {
    if (rle.counts[i] == 0) return false;
  }
  return !rle.counts.empty();
}

RleMask rle_encode(const BitMask& mask) {
  CountsBuilder builder;
  const auto& bits = mask.column_major();
  std::size_t i = 0;
  while (i < bits.size()) {
    std::size_t j = i;
    while (j < bits.size() && bits[j] == bits[i]) ++j;
    builder.push(j - i, bits[i] != 0);
    i = j;
  }
  return RleMask{mask.height(), mask.width(), std::move(builder).finish()};
}

BitMask rle_decode(const RleMask& rle) {
  check_rle(rle);
  BitMask mask(rle.height, rle.width);
  auto& bits = mask.column_major();
  std::size_t pos = 0;
  for (std::size_t i = 0; i < rle.counts.size(); ++i) {
    if (i % 2 == 1) {
      std::fill_n(bits.begin() + static_cast<std::ptrdiff_t>(pos),
                  rle.counts[i], std::uint8_t{1});
    }
    pos += rle.counts[i];
  }
  return mask;
}

std::string rle_string_encode(const RleMask& rle) {
  std::string out;
  for (std::size_t i = 0; i < rle.counts.size(); ++i) {
    std::int64_t x = rle.counts[i];
    if (i > 2) x -= static_cast<std::int64_t>(rle.counts[i - 2]);
    bool more = true;
    while (more) {
      std::int64_t c = x & 0x1f;
      x >>= 5;
      more = (c & 0x10) ? x != -1 : x != 0;
      if (more) c |= 0x20;
      out.push_back(static_cast<char>(c + 48));
    }
  }
  return out;
}

RleMask rle_string_decode(std::string_view counts, std::uint32_t height,
                          std::uint32_t width) {
  RleMask rle{height, width, {}};
  std::vector<std::int64_t> values;
  std::size_t p = 0;
  while (p < counts.size()) {
    std::int64_t x = 0;
    int shift = 0;
    bool more = true;
    while (more) {
      if (p >= counts.size()) {
        throw CodecError("truncated continuation chain at offset " +
                         std::to_string(p));
      }
      const int ch = static_cast<unsigned char>(counts[p]);
      if (ch < 48 || ch > 111) {
        throw CodecError("character code " + std::to_string(ch) +
                         " outside 48-111 at offset " + std::to_string(p));
      }
      if (shift >= 60) throw CodecError("run count overflows 64 bits");
      const std::int64_t c = ch - 48;
      x |= (c & 0x1f) << shift;
      more = (c & 0x20) != 0;
      ++p;
      shift += 5;
      if (!more && (c & 0x10)) {
        x |= static_cast<std::int64_t>(~std::uint64_t{0} << shift);
      }
    }
    if (values.size() > 2) x += values[values.size() - 2];
    if (x < 0 || x > std::numeric_limits<std::uint32_t>::max()) {
      throw CodecError("decoded run count " + std::to_string(x) +
                       " out of range at index " +
                       std::to_string(values.size()));
    }
    values.push_back(x);
  }
  rle.counts.assign(values.begin(), values.end());
  return rle;
}

RleMask polygons_to_rle(const Polygons& polygons, std::uint32_t height,
                        std::uint32_t width) {
  for (const auto& ring : polygons.rings) {
    if (ring.size() < 6 || ring.size() % 2 != 0) {
      throw FormatError("polygon needs an even number of >= 6 coordinates, got " +
                        std::to_string(ring.size()));
    }
  }
  BitMask mask(height, width);
  std::vector<double> crossings;
  for (const auto& ring : polygons.rings) {
    const std::size_t n = ring.size() / 2;
    for (std::uint32_t row = 0; row < height; ++row) {
      const double py = row + 0.5;
      crossings.clear();
      for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const double xi = ring[2 * i], yi = ring[2 * i + 1];
        const double xj = ring[2 * j], yj = ring[2 * j + 1];
        if ((yi > py) != (yj > py)) {
          crossings.push_back((xj - xi) * (py - yi) / (yj - yi) + xi);
        }
      }
      std::sort(crossings.begin(), crossings.end());
      // Center x is inside iff it falls in [crossings[2k], crossings[2k+1]).
      for (std::size_t k = 0; k + 1 < crossings.size(); k += 2) {
        const double lo = first_center_at_or_after(crossings[k]);
        const double hi = first_center_at_or_after(crossings[k + 1]);
        const double first = std::max(lo, 0.0);
        const double last = std::min(hi, static_cast<double>(width));
        for (double c = first; c < last; c += 1.0) {
          mask.set(row, static_cast<std::uint32_t>(c));
        }
      }
    }
  }
  return rle_encode(mask);
}

std::uint64_t rle_area(const RleMask& rle) {
  std::uint64_t area = 0;
  for (std::size_t i = 1; i < rle.counts.size(); i += 2) area += rle.counts[i];
  return area;
}

BBox rle_to_bbox(const RleMask& rle) {
  const std::uint64_t h = rle.height;
  if (h == 0 || rle.counts.size() < 2) return {};
  std::uint64_t xs = std::numeric_limits<std::uint64_t>::max(), xe = 0;
  std::uint64_t ys = std::numeric_limits<std::uint64_t>::max(), ye = 0;
  std::uint64_t pos = 0;
  bool any = false;
  for (std::size_t i = 0; i < rle.counts.size(); ++i) {
    const std::uint64_t c = rle.counts[i];
    if (i % 2 == 1 && c > 0) {
      any = true;
      const std::uint64_t start = pos;
      const std::uint64_t end = pos + c - 1;
      const std::uint64_t col_s = start / h, col_e = end / h;
      xs = std::min(xs, col_s);
      xe = std::max(xe, col_e);
      if (col_s == col_e) {
        ys = std::min(ys, start % h);
        ye = std::max(ye, end % h);
      } else {
        ys = 0;
        ye = h - 1;
      }
    }
    pos += c;
  }
  if (!any) return {};
  return BBox{static_cast<double>(xs), static_cast<double>(ys),
              static_cast<double>(xe - xs + 1), static_cast<double>(ye - ys + 1)};
}

RleMask bbox_to_rle(const BBox& box, std::uint32_t height, std::uint32_t width) {
  auto span = [](double lo, double extent, std::uint32_t limit) {
    const double first = std::max(first_center_at_or_after(lo), 0.0);
    const double last = std::min(first_center_at_or_after(lo + extent),
                                 static_cast<double>(limit));
    if (!(first < last)) return std::pair<std::uint64_t, std::uint64_t>{0, 0};
    return std::pair<std::uint64_t, std::uint64_t>{
        static_cast<std::uint64_t>(first), static_cast<std::uint64_t>(last)};
  };
  const auto [c0, c1] = span(box.x, box.w, width);
  const auto [r0, r1] = span(box.y, box.h, height);
  CountsBuilder builder;
  if (c0 < c1 && r0 < r1) {
    builder.push(c0 * height, false);
    for (std::uint64_t c = c0; c < c1; ++c) {
      builder.push(r0, false);
      builder.push(r1 - r0, true);
      builder.push(height - r1, false);
    }
    builder.push((width - c1) * height, false);
  } else {
    builder.push(static_cast<std::uint64_t>(height) * width, false);
  }
  return RleMask{height, width, std::move(builder).finish()};
}

RleMask rle_merge(std::span<const RleMask> masks, MergeMode mode) {
  if (masks.empty()) return RleMask{0, 0, {0}};
  for (const auto& m : masks) {
    require_same_size(masks.front(), m);
    check_rle(m);
  }
  RleMask acc = masks.front();
  for (std::size_t k = 1; k < masks.size(); ++k) {
    CountsBuilder builder;
    walk_pair(acc, masks[k], [&](std::uint64_t n, bool a, bool b) {
      builder.push(n, mode == MergeMode::kUnion ? (a || b) : (a && b));
    });
    acc.counts = std::move(builder).finish();
  }
  if (masks.size() == 1) {
    // Re-canonicalize a lone input.
    CountsBuilder builder;
    walk_pair(acc, acc, [&](std::uint64_t n, bool a, bool) { builder.push(n, a); });
    acc.counts = std::move(builder).finish();
  }
  return acc;
}

double mask_iou(const RleMask& dt, const RleMask& gt, bool crowd) {
  require_same_size(dt, gt);
  check_rle(dt);
  check_rle(gt);
  std::uint64_t inter = 0, uni = 0, dt_area = 0;
  walk_pair(dt, gt, [&](std::uint64_t n, bool a, bool b) {
    if (a && b) inter += n;
    if (a || b) uni += n;
    if (a) dt_area += n;
  });
  const std::uint64_t denom = crowd ? dt_area : uni;
  if (denom == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(denom);
}

double bbox_iou(const BBox& dt, const BBox& gt, bool crowd) {
  const double iw = std::min(dt.x + dt.w, gt.x + gt.w) - std::max(dt.x, gt.x);
  if (iw <= 0) return 0.0;
  const double ih = std::min(dt.y + dt.h, gt.y + gt.h) - std::max(dt.y, gt.y);
  if (ih <= 0) return 0.0;
  const double inter = iw * ih;
  const double denom = crowd ? dt.area() : dt.area() + gt.area() - inter;
  if (denom <= 0) return 0.0;
  return inter / denom;
}

RleMask segmentation_to_rle(const Segmentation& seg, std::uint32_t height,
                            std::uint32_t width) {
  auto same_size = [&](std::uint32_t h, std::uint32_t w) {
    if (h != height || w != width) {
      throw DimensionError("segmentation size " + std::to_string(h) + "x" +
                           std::to_string(w) + " does not match image " +
                           std::to_string(height) + "x" + std::to_string(width));
    }
  };
  if (const auto* poly = std::get_if<Polygons>(&seg)) {
    return polygons_to_rle(*poly, height, width);
  }
  if (const auto* counts = std::get_if<RleCounts>(&seg)) {
    same_size(counts->mask.height, counts->mask.width);
    check_rle(counts->mask);
    return counts->mask;
  }
  const auto& str = std::get<RleString>(seg);
  same_size(str.height, str.width);
  RleMask rle = rle_string_decode(str.counts, str.height, str.width);
  check_rle(rle);
  return rle;
}

}  // namespace propeval::maskops
