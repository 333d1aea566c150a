#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "propeval/model.hpp"

// Best-overlap oracle over class-agnostic proposals: every annotated object
// gets the proposal that overlaps it most, labelled with the object's
// category and scored 1.
namespace propeval::oracle {

struct Proposal {
  std::optional<BBox> box;
  // Kept in interchange form and decoded per image on demand.
  std::optional<Segmentation> segmentation;
  // Position within the image's list after loading; ties resolve to the
  // lowest rank.
  std::int64_t rank = 0;
  friend bool operator==(const Proposal&, const Proposal&) = default;
};

struct ProposalSet {
  // Per-image proposal lists ordered by rank, keyed by ascending image id.
  std::map<Id, std::vector<Proposal>> images;
};

// Proposals document: flat array of {image_id, bbox | segmentation, rank?}.
// Records without `rank` use their index in the file. When `dataset` is
// given, image ids must resolve (IntegrityError) and polygons are allowed;
// otherwise only box and RLE geometry can be stored.
ProposalSet load_proposals(const Json& doc, const Dataset* dataset);

// Keeps at most `limit` proposals per image.
void truncate_proposals(ProposalSet& proposals, std::size_t limit);

struct ProposalStats {
  std::size_t image_count = 0;
  std::size_t total = 0;
  double mean_per_image = 0.0;
  std::size_t min = 0;
  std::size_t max = 0;
  friend bool operator==(const ProposalStats&, const ProposalStats&) = default;
};

ProposalStats proposal_stats(const ProposalSet& proposals);

struct OracleOptions {
  bool skip_crowd = false;
  int workers = 1;
};

// One detection per annotation whose image has proposals, emitted in
// ascending (image id, annotation id) order with seq equal to the emission
// index. Best IoU ties go to the earliest proposal; a best IoU of 0 still
// emits the first proposal.
std::vector<Detection> oracle_select(const Dataset& dataset,
                                     const ProposalSet& proposals, Task task,
                                     const OracleOptions& options = {});

}  // namespace propeval::oracle
