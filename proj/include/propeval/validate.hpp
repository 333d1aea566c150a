#pragma once

#include <string>
#include <vector>

#include "propeval/model.hpp"

namespace propeval {

struct Violation {
  std::string path;
  std::string message;
};

enum class DocumentKind { kGroundTruth, kResults, kProposals };

// Guesses the kind: an object is ground truth; an array whose first record
// carries "score" is a results document, otherwise proposals.
DocumentKind detect_kind(const Json& doc);

// Checks every record independently and collects all problems instead of
// stopping at the first. `ground_truth`, when given, enables referential
// and image-size checks for results and proposals.
std::vector<Violation> validate_document(const Json& doc, DocumentKind kind,
                                         const Dataset* ground_truth = nullptr);

}  // namespace propeval
