#include "propeval/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"

#include "propeval/error.hpp"
#include "propeval/evalengine.hpp"
#include "propeval/model.hpp"
#include "propeval/oracle.hpp"
#include "propeval/summary.hpp"
#include "propeval/synth.hpp"
#include "propeval/validate.hpp"

namespace propeval::cli {

namespace {

struct RunConfig {
  std::string gt_path;
  std::string proposals_path;
  std::string results_path;
  std::string out_path;
  std::string task = "box";
  bool skip_crowd = false;
  std::size_t max_proposals = 0;
  int workers = 1;
  SynthConfig synth;
};

void write_json(const std::string& path, const Json& doc) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParseError(path + ": cannot open for writing");
  out << doc.dump() << '\n';
  if (!out) throw ParseError(path + ": write failed");
}

std::string format_mean(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

void print_stats(const oracle::ProposalStats& s, std::ostream& out) {
  out << "images with proposals: " << s.image_count << '\n'
      << "total proposals: " << s.total << '\n'
      << "mean proposals per image: " << format_mean(s.mean_per_image) << '\n'
      << "min proposals per image: " << s.min << '\n'
      << "max proposals per image: " << s.max << '\n';
}

Dataset load_gt(const RunConfig& cfg, std::ostream& err) {
  return load_dataset(read_json_file(cfg.gt_path),
                      [&err](const std::string& msg) { err << "warning: " << msg << '\n'; });
}

int cmd_oracle(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Task task = parse_task(cfg.task);
  const Dataset dataset = load_gt(cfg, err);
  oracle::ProposalSet proposals =
      oracle::load_proposals(read_json_file(cfg.proposals_path), &dataset);
  if (cfg.max_proposals > 0) oracle::truncate_proposals(proposals, cfg.max_proposals);
  const auto detections = oracle::oracle_select(
      dataset, proposals, task, {.skip_crowd = cfg.skip_crowd, .workers = cfg.workers});
  write_json(cfg.out_path, to_json(detections));
  print_stats(oracle::proposal_stats(proposals), out);
  out << "oracle detections: " << detections.size() << '\n';
  return kExitOk;
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Task task = parse_task(cfg.task);
  const Dataset dataset = load_gt(cfg, err);
  const auto detections = load_detections(read_json_file(cfg.results_path), dataset, task);
  const eval::EvalParams params = eval::EvalParams::coco(task);
  const eval::Evaluation result = eval::evaluate(dataset, detections, params, cfg.workers);
  out << render_summary(result.summary, params);
  if (!cfg.out_path.empty()) write_json(cfg.out_path, summary_to_json(result, dataset));
  return kExitOk;
}

int cmd_synth(const RunConfig& cfg, std::ostream& out) {
  const SynthOutput fixture = synthesize(cfg.synth);
  write_json(cfg.gt_path, fixture.ground_truth);
  write_json(cfg.proposals_path, fixture.proposals);
  out << "images: " << fixture.ground_truth["images"].size() << '\n'
      << "annotations: " << fixture.ground_truth["annotations"].size() << '\n'
      << "proposals: " << fixture.proposals.size() << '\n';
  return kExitOk;
}

int cmd_validate(const RunConfig& cfg, std::ostream& out) {
  struct Target {
    std::string path;
    DocumentKind kind;
  };
  std::vector<Target> targets;
  if (!cfg.gt_path.empty()) targets.push_back({cfg.gt_path, DocumentKind::kGroundTruth});
  if (!cfg.results_path.empty()) targets.push_back({cfg.results_path, DocumentKind::kResults});
  if (!cfg.proposals_path.empty()) {
    targets.push_back({cfg.proposals_path, DocumentKind::kProposals});
  }
  if (targets.empty()) throw FormatError("validate needs --gt, --results or --proposals");

  // Results and proposals are cross-checked against clean ground truth.
  std::optional<Dataset> dataset;
  std::size_t total = 0;
  for (const auto& target : targets) {
    const Json doc = read_json_file(target.path);
    const auto violations =
        validate_document(doc, target.kind, dataset ? &*dataset : nullptr);
    for (const auto& v : violations) {
      out << target.path << ": " << v.path << ": " << v.message << '\n';
    }
    total += violations.size();
    if (target.kind == DocumentKind::kGroundTruth && violations.empty()) {
      dataset = load_dataset(doc);
    }
  }
  out << total << (total == 1 ? " violation" : " violations") << '\n';
  return total == 0 ? kExitOk : kExitValidation;
}

int cmd_stats(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  std::optional<Dataset> dataset;
  if (!cfg.gt_path.empty()) dataset = load_gt(cfg, err);
  oracle::ProposalSet proposals =
      oracle::load_proposals(read_json_file(cfg.proposals_path), dataset ? &*dataset : nullptr);
  if (cfg.max_proposals > 0) oracle::truncate_proposals(proposals, cfg.max_proposals);
  print_stats(oracle::proposal_stats(proposals), out);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Best-overlap proposal oracle and COCO-style detection evaluation", "propeval"};
  app.require_subcommand(1);

  const std::vector<std::string> tasks = {"box", "mask", "bbox", "segm"};
  auto add_workers = [&](CLI::App* sub) {
    sub->add_option("--workers", cfg.workers, "Worker threads")->check(CLI::PositiveNumber);
  };

  auto* oracle_cmd = app.add_subcommand("oracle", "Build best-overlap oracle detections");
  oracle_cmd->add_option("--gt", cfg.gt_path, "Ground-truth annotations")->required()
      ->check(CLI::ExistingFile);
  oracle_cmd->add_option("--proposals", cfg.proposals_path, "Class-agnostic proposals")
      ->required()->check(CLI::ExistingFile);
  oracle_cmd->add_option("--task", cfg.task, "box or mask")->required()
      ->check(CLI::IsMember(tasks));
  oracle_cmd->add_option("--out", cfg.out_path, "Results document to write")->required();
  oracle_cmd->add_flag("--skip-crowd", cfg.skip_crowd, "Do not target crowd annotations");
  oracle_cmd->add_option("--max-proposals", cfg.max_proposals,
                         "Keep only the first N proposals per image");
  add_workers(oracle_cmd);

  auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate a results document");
  eval_cmd->add_option("--gt", cfg.gt_path, "Ground-truth annotations")->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--results", cfg.results_path, "Detections")->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--task", cfg.task, "box or mask")->required()
      ->check(CLI::IsMember(tasks));
  eval_cmd->add_option("--out", cfg.out_path, "Machine-readable summary to write");
  add_workers(eval_cmd);

  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic fixture");
  synth_cmd->add_option("--seed", cfg.synth.seed, "Random seed")->required();
  synth_cmd->add_option("--gt", cfg.gt_path, "Ground-truth output path")->required();
  synth_cmd->add_option("--proposals", cfg.proposals_path, "Proposals output path")->required();
  synth_cmd->add_option("--images", cfg.synth.images, "Number of images")
      ->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--objects", cfg.synth.objects_per_image, "Objects per image")
      ->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--categories", cfg.synth.categories,
                        "Category count (default: one per object slot)")
      ->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--jitter", cfg.synth.jitter, "Jitter as a fraction of object size")
      ->check(CLI::Range(0.0, 1.0));
  synth_cmd->add_option("--distractors", cfg.synth.distractors, "Random proposals per image")
      ->check(CLI::NonNegativeNumber);

  auto* validate_cmd = app.add_subcommand("validate", "Check documents for schema violations");
  validate_cmd->add_option("--gt", cfg.gt_path, "Ground-truth annotations")
      ->check(CLI::ExistingFile);
  validate_cmd->add_option("--results", cfg.results_path, "Results document")
      ->check(CLI::ExistingFile);
  validate_cmd->add_option("--proposals", cfg.proposals_path, "Proposals document")
      ->check(CLI::ExistingFile);

  auto* stats_cmd = app.add_subcommand("stats", "Proposal count statistics");
  stats_cmd->add_option("--proposals", cfg.proposals_path, "Proposals document")->required()
      ->check(CLI::ExistingFile);
  stats_cmd->add_option("--gt", cfg.gt_path, "Ground truth for reference checks")
      ->check(CLI::ExistingFile);
  stats_cmd->add_option("--max-proposals", cfg.max_proposals,
                        "Keep only the first N proposals per image");

  std::vector<const char*> argv{"propeval"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }

  try {
    if (*oracle_cmd) return cmd_oracle(cfg, out, err);
    if (*eval_cmd) return cmd_evaluate(cfg, out, err);
    if (*synth_cmd) return cmd_synth(cfg, out);
    if (*validate_cmd) return cmd_validate(cfg, out);
    if (*stats_cmd) return cmd_stats(cfg, out, err);
  } catch (const IntegrityError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitIo;
}

}  // namespace propeval::cli
