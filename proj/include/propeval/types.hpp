#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace propeval {

using Id = std::int64_t;

enum class Task { kBox, kMask };

const char* task_name(Task task);
// Accepts "box"/"bbox" and "mask"/"segm"; throws FormatError otherwise.
Task parse_task(const std::string& name);

// Axis-aligned box in pixel coordinates: left, top, width, height.
struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const { return w * h; }
  friend bool operator==(const BBox&, const BBox&) = default;
};

// Column-major run-length encoded binary mask. Runs alternate
// background/foreground and always start with a (possibly empty) background
// run.
struct RleMask {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::vector<std::uint32_t> counts;

  std::uint64_t pixel_count() const {
    return static_cast<std::uint64_t>(height) * width;
  }
  friend bool operator==(const RleMask&, const RleMask&) = default;
};

// Dense binary grid addressed by (row, col). Only used at test and tool
// boundaries; evaluation stays in run-length form.
class BitMask {
 public:
  BitMask() = default;
  BitMask(std::uint32_t height, std::uint32_t width)
      : height_(height), width_(width),
        bits_(static_cast<std::size_t>(height) * width, 0) {}

  std::uint32_t height() const { return height_; }
  std::uint32_t width() const { return width_; }

  bool get(std::uint32_t row, std::uint32_t col) const {
    return bits_[index(row, col)] != 0;
  }
  void set(std::uint32_t row, std::uint32_t col, bool value = true) {
    bits_[index(row, col)] = value ? 1 : 0;
  }

  // Raw storage in column-major scan order.
  const std::vector<std::uint8_t>& column_major() const { return bits_; }
  std::vector<std::uint8_t>& column_major() { return bits_; }

  friend bool operator==(const BitMask&, const BitMask&) = default;

 private:
  std::size_t index(std::uint32_t row, std::uint32_t col) const {
    return static_cast<std::size_t>(col) * height_ + row;
  }

  std::uint32_t height_ = 0;
  std::uint32_t width_ = 0;
  std::vector<std::uint8_t> bits_;
};

// Flat coordinate lists [x1, y1, x2, y2, ...], one per polygon.
struct Polygons {
  std::vector<std::vector<double>> rings;
  friend bool operator==(const Polygons&, const Polygons&) = default;
};

// Uncompressed run counts as they appear in interchange documents.
struct RleCounts {
  RleMask mask;
  friend bool operator==(const RleCounts&, const RleCounts&) = default;
};

// Compressed counts string; decoded lazily.
struct RleString {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::string counts;
  friend bool operator==(const RleString&, const RleString&) = default;
};

using Segmentation = std::variant<Polygons, RleCounts, RleString>;

inline bool is_rle(const Segmentation& seg) {
  return !std::holds_alternative<Polygons>(seg);
}

}  // namespace propeval
