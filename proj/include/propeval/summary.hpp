#pragma once

#include <string>

#include "propeval/evalengine.hpp"
#include "propeval/model.hpp"

namespace propeval {

// One line in the layout of the reference evaluator, e.g.
// "Average Precision  (AP) @[ IoU=0.50:0.95 | area=   all | maxDets=100 ] = 0.317"
std::string render_summary_line(const eval::SummaryEntry& entry,
                                const eval::EvalParams& params);

// All rows, newline terminated.
std::string render_summary(const eval::SummaryTable& table, const eval::EvalParams& params);

// Short metric keys in table order: AP, AP50, AP75, APs, APm, APl, AR1,
// AR10, AR100, ARs, ARm, ARl.
const std::vector<std::string>& summary_keys();

// {"task", "metrics": {key: value}, "per_category_ap": [{category_id, name, ap}]}
Json summary_to_json(const eval::Evaluation& evaluation, const Dataset& dataset);

}  // namespace propeval
