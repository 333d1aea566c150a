#pragma once

#include <cstdint>

#include "propeval/model.hpp"

namespace propeval {

struct SynthConfig {
  std::uint64_t seed = 0;
  int images = 10;
  int objects_per_image = 3;
  // 0 means one category per object slot, which keeps at most one object
  // of each category in every image.
  int categories = 0;
  // Max shift of a jittered copy, as a fraction of the object's extent.
  // Jittered copies are only produced when jitter > 0.
  double jitter = 0.0;
  int jittered_copies = 2;
  int distractors = 20;
};

struct SynthOutput {
  Json ground_truth;
  Json proposals;
};

// Deterministic desk-scale fixture: images of 64-640 px, rectangle, star
// polygon and multi-blob RLE objects across the small/medium/large size
// buckets, and per-image proposals made of exact copies, jittered copies
// and random box distractors (shuffled).
SynthOutput synthesize(const SynthConfig& config);

}  // namespace propeval
