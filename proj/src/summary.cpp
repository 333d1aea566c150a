#include "propeval/summary.hpp"

#include <cstdio>

namespace propeval {

std::string render_summary_line(const eval::SummaryEntry& entry,
                                const eval::EvalParams& params) {
  const bool ap = entry.kind == eval::MetricKind::kAP;
  char iou[32];
  if (entry.iou) {
    std::snprintf(iou, sizeof(iou), "%0.2f", *entry.iou);
  } else if (!params.iou_thresholds.empty()) {
    std::snprintf(iou, sizeof(iou), "%0.2f:%0.2f", params.iou_thresholds.front(),
                  params.iou_thresholds.back());
  } else {
    iou[0] = '\0';
  }
  char line[160];
  std::snprintf(line, sizeof(line), "%-18s %s @[ IoU=%-9s | area=%6s | maxDets=%3d ] = %0.3f",
                ap ? "Average Precision" : "Average Recall", ap ? "(AP)" : "(AR)", iou,
                entry.area_label.c_str(), entry.max_dets, entry.value);
  return line;
}

std::string render_summary(const eval::SummaryTable& table, const eval::EvalParams& params) {
  std::string out;
  for (const auto& entry : table) {
    out += render_summary_line(entry, params);
    out += '\n';
  }
  return out;
}

const std::vector<std::string>& summary_keys() {
  static const std::vector<std::string> keys = {"AP",  "AP50", "AP75",  "APs",
                                                "APm", "APl",  "AR1",   "AR10",
                                                "AR100", "ARs", "ARm", "ARl"};
  return keys;
}

Json summary_to_json(const eval::Evaluation& evaluation, const Dataset& dataset) {
  Json metrics = Json::object();
  const auto& keys = summary_keys();
  for (std::size_t i = 0; i < evaluation.summary.size() && i < keys.size(); ++i) {
    metrics[keys[i]] = evaluation.summary[i].value;
  }
  const std::vector<double> ap = eval::per_category_ap(evaluation.accum);
  Json per_cat = Json::array();
  for (std::size_t k = 0; k < ap.size(); ++k) {
    const Id id = evaluation.accum.category_ids[k];
    std::string name;
    for (const auto& c : dataset.categories()) {
      if (c.id == id) name = c.name;
    }
    per_cat.push_back({{"category_id", id}, {"name", name}, {"ap", ap[k]}});
  }
  return Json{{"task", task_name(evaluation.accum.params.task)},
              {"metrics", std::move(metrics)},
              {"per_category_ap", std::move(per_cat)}};
}

}  // namespace propeval
