#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "propeval/types.hpp"

// Run-length mask codec and overlap geometry. All functions are pure.
namespace propeval::maskops {

RleMask rle_encode(const BitMask& mask);

// Throws CodecError unless sum(counts) == height * width.
BitMask rle_decode(const RleMask& rle);

// Compressed counts string in the COCO interchange format: counts are
// difference-coded against the count two positions back (from index 3 on),
// then written as little-endian 5-bit groups with 0x20 as the continuation
// bit, offset by '0'.
std::string rle_string_encode(const RleMask& rle);
RleMask rle_string_decode(std::string_view counts, std::uint32_t height,
                          std::uint32_t width);

// Pixel (row r, col c) is foreground iff its center (c + 0.5, r + 0.5) is
// inside some ring under the even-odd rule. Rings need >= 3 vertices.
RleMask polygons_to_rle(const Polygons& polygons, std::uint32_t height,
                        std::uint32_t width);

std::uint64_t rle_area(const RleMask& rle);

// Tightest enclosing box of the foreground; all-zero box for empty masks.
BBox rle_to_bbox(const RleMask& rle);

// Same pixel-center rule as polygons_to_rle, clipped to the grid.
RleMask bbox_to_rle(const BBox& box, std::uint32_t height, std::uint32_t width);

enum class MergeMode { kUnion, kIntersection };

// Run-wise merge; the result is canonical. An empty list yields an empty
// 0x0 mask.
RleMask rle_merge(std::span<const RleMask> masks, MergeMode mode);

// crowd == false: |dt & gt| / |dt | gt|; crowd == true: |dt & gt| / |dt|.
// Zero denominators give 0. Throws DimensionError on size mismatch.
double mask_iou(const RleMask& dt, const RleMask& gt, bool crowd);

double bbox_iou(const BBox& dt, const BBox& gt, bool crowd);

// Throws CodecError if the counts do not cover exactly height * width pixels.
void check_rle(const RleMask& rle);

// Canonical: at most a leading zero run, no other zero runs.
bool is_canonical(const RleMask& rle);

// Converts any segmentation variant to a mask on an image of the given
// size. RLE variants must declare that same size (DimensionError).
RleMask segmentation_to_rle(const Segmentation& seg, std::uint32_t height,
                            std::uint32_t width);

}  // namespace propeval::maskops
