#include <gtest/gtest.h>

#include "propeval/cli.hpp"
#include "propeval/model.hpp"
#include "propeval/summary.hpp"
#include "support/fixtures.hpp"

using namespace propeval;
using propeval::testkit::run_cli;
using propeval::testkit::slurp;
using propeval::testkit::TempDir;

namespace {

const char* kHandCaseSummary =
    "Average Precision  (AP) @[ IoU=0.50:0.95 | area=   all | maxDets=100 ] = 0.300\n"
    "Average Precision  (AP) @[ IoU=0.50      | area=   all | maxDets=100 ] = 1.000\n"
    "Average Precision  (AP) @[ IoU=0.75      | area=   all | maxDets=100 ] = 0.000\n"
    "Average Precision  (AP) @[ IoU=0.50:0.95 | area= small | maxDets=100 ] = 0.300\n"
    "Average Precision  (AP) @[ IoU=0.50:0.95 | area=medium | maxDets=100 ] = -1.000\n"
    "Average Precision  (AP) @[ IoU=0.50:0.95 | area= large | maxDets=100 ] = -1.000\n"
    "Average Recall     (AR) @[ IoU=0.50:0.95 | area=   all | maxDets=  1 ] = 0.300\n"
    "Average Recall     (AR) @[ IoU=0.50:0.95 | area=   all | maxDets= 10 ] = 0.300\n"
    "Average Recall     (AR) @[ IoU=0.50:0.95 | area=   all | maxDets=100 ] = 0.300\n"
    "Average Recall     (AR) @[ IoU=0.50:0.95 | area= small | maxDets=100 ] = 0.300\n"
    "Average Recall     (AR) @[ IoU=0.50:0.95 | area=medium | maxDets=100 ] = -1.000\n"
    "Average Recall     (AR) @[ IoU=0.50:0.95 | area= large | maxDets=100 ] = -1.000\n";

std::vector<std::string> synth_args(const TempDir& dir, const std::string& tag,
                                    const std::string& seed) {
  return {"synth", "--seed", seed, "--gt", dir.file(tag + "_gt.json"), "--proposals",
          dir.file(tag + "_props.json")};
}

}  // namespace

TEST(Cli, EvaluateHandCaseGolden) {
  TempDir dir("cli_eval");
  const auto gt = dir.write("gt.json", testkit::hand_case_gt());
  const auto res = dir.write("res.json", testkit::hand_case_results());
  const auto r = run_cli({"evaluate", "--gt", gt, "--results", res, "--task", "box"});
  EXPECT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_EQ(r.out, kHandCaseSummary);
}

TEST(Cli, EvaluateWritesMachineReadableSummary) {
  TempDir dir("cli_json");
  const auto gt = dir.write("gt.json", testkit::hand_case_gt());
  const auto res = dir.write("res.json", testkit::hand_case_results());
  const auto out = dir.file("summary.json");
  const auto r =
      run_cli({"evaluate", "--gt", gt, "--results", res, "--task", "bbox", "--out", out});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const Json doc = read_json_file(out);
  EXPECT_EQ(doc["task"], "box");
  for (const auto& key : summary_keys()) EXPECT_TRUE(doc["metrics"].contains(key)) << key;
  EXPECT_NEAR(doc["metrics"]["AP"].get<double>(), 0.3, 1e-12);
  EXPECT_EQ(doc["metrics"]["APm"].get<double>(), -1.0);
  ASSERT_EQ(doc["per_category_ap"].size(), 1u);
  EXPECT_EQ(doc["per_category_ap"][0]["name"], "thing");
}

TEST(Cli, EvaluateErrorsMapToExitCodes) {
  TempDir dir("cli_err");
  const auto gt = dir.write("gt.json", testkit::hand_case_gt());
  Json bad = testkit::hand_case_results();
  bad[0]["image_id"] = 55;
  const auto res = dir.write("res.json", bad);
  auto r = run_cli({"evaluate", "--gt", gt, "--results", res, "--task", "box"});
  EXPECT_EQ(r.code, cli::kExitValidation);
  EXPECT_NE(r.err.find("55"), std::string::npos) << r.err;

  const auto broken = dir.write_text("broken.json", "[{");
  r = run_cli({"evaluate", "--gt", gt, "--results", broken, "--task", "box"});
  EXPECT_EQ(r.code, cli::kExitIo);
  EXPECT_NE(r.err.find("broken.json"), std::string::npos) << r.err;

  r = run_cli({"evaluate", "--gt", dir.file("nope.json"), "--results", res, "--task", "box"});
  EXPECT_EQ(r.code, cli::kExitIo);
  r = run_cli({"evaluate", "--gt", gt, "--results", res, "--task", "keypoints"});
  EXPECT_EQ(r.code, cli::kExitIo);
  // Box-only results cannot be scored as masks.
  const auto boxes = dir.write("boxes.json", testkit::hand_case_results());
  r = run_cli({"evaluate", "--gt", gt, "--results", boxes, "--task", "mask"});
  EXPECT_EQ(r.code, cli::kExitIo);
}

TEST(Cli, SynthIsDeterministic) {
  TempDir dir("cli_synth");
  ASSERT_EQ(run_cli(synth_args(dir, "a", "7")).code, cli::kExitOk);
  ASSERT_EQ(run_cli(synth_args(dir, "b", "7")).code, cli::kExitOk);
  ASSERT_EQ(run_cli(synth_args(dir, "c", "8")).code, cli::kExitOk);
  EXPECT_EQ(slurp(dir.file("a_gt.json")), slurp(dir.file("b_gt.json")));
  EXPECT_EQ(slurp(dir.file("a_props.json")), slurp(dir.file("b_props.json")));
  EXPECT_NE(slurp(dir.file("a_gt.json")), slurp(dir.file("c_gt.json")));

  const Dataset ds = load_dataset(read_json_file(dir.file("a_gt.json")));
  EXPECT_EQ(ds.images().size(), 10u);
  EXPECT_EQ(ds.annotations().size(), 30u);
}

TEST(Cli, SynthWithoutJitterContainsEveryObject) {
  TempDir dir("cli_exact");
  ASSERT_EQ(run_cli(synth_args(dir, "s", "3")).code, cli::kExitOk);
  const Dataset ds = load_dataset(read_json_file(dir.file("s_gt.json")));
  const Json props = read_json_file(dir.file("s_props.json"));
  for (const auto& a : ds.annotations()) {
    bool found = false;
    for (const auto& p : props) {
      if (p["image_id"] == a.image_id && p.contains("bbox") &&
          parse_bbox(p["bbox"], "bbox") == a.bbox) {
        found = true;
      }
    }
    EXPECT_TRUE(found) << "annotation " << a.id;
  }
}

TEST(Cli, OracleEndToEnd) {
  TempDir dir("cli_oracle");
  ASSERT_EQ(run_cli(synth_args(dir, "s", "7")).code, cli::kExitOk);
  const auto gt = dir.file("s_gt.json");
  const auto props = dir.file("s_props.json");
  for (const std::string task : {"box", "mask"}) {
    const auto out1 = dir.file(task + "_1.json");
    const auto out2 = dir.file(task + "_2.json");
    auto r = run_cli({"oracle", "--gt", gt, "--proposals", props, "--task", task, "--out", out1});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    EXPECT_NE(r.out.find("oracle detections: 30"), std::string::npos) << r.out;
    r = run_cli({"oracle", "--gt", gt, "--proposals", props, "--task", task, "--out", out2,
                 "--workers", "4"});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    EXPECT_EQ(slurp(out1), slurp(out2));

    r = run_cli({"evaluate", "--gt", gt, "--results", out1, "--task", task});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    EXPECT_NE(r.out.find("maxDets=100 ] = 1.000"), std::string::npos) << r.out;
    EXPECT_EQ(r.out.find("= 0."), std::string::npos) << r.out;
  }
}

TEST(Cli, OracleRejectsUnknownImage) {
  TempDir dir("cli_missing");
  const auto gt = dir.write("gt.json", testkit::hand_case_gt());
  const auto props = dir.write("props.json", Json::parse(R"([
    {"image_id": 1, "bbox": [0, 0, 10, 10]},
    {"image_id": 404, "bbox": [0, 0, 10, 10]}
  ])"));
  const auto r = run_cli({"oracle", "--gt", gt, "--proposals", props, "--task", "box", "--out",
                          dir.file("out.json")});
  EXPECT_EQ(r.code, cli::kExitValidation);
  EXPECT_NE(r.err.find("404"), std::string::npos) << r.err;
}

TEST(Cli, MaxProposalsCapsMean) {
  TempDir dir("cli_cap");
  auto args = synth_args(dir, "s", "11");
  args.insert(args.end(), {"--distractors", "150"});
  ASSERT_EQ(run_cli(args).code, cli::kExitOk);
  const auto gt = dir.file("s_gt.json");
  const auto props = dir.file("s_props.json");
  auto r = run_cli({"stats", "--proposals", props});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_NE(r.out.find("mean proposals per image: 153.000"), std::string::npos) << r.out;
  r = run_cli({"oracle", "--gt", gt, "--proposals", props, "--task", "box", "--out",
               dir.file("o.json"), "--max-proposals", "100"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_NE(r.out.find("mean proposals per image: 100.000"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("max proposals per image: 100\n"), std::string::npos) << r.out;
}

TEST(Cli, ValidateCleanAndBroken) {
  TempDir dir("cli_validate");
  ASSERT_EQ(run_cli(synth_args(dir, "s", "5")).code, cli::kExitOk);
  auto r = run_cli({"validate", "--gt", dir.file("s_gt.json"), "--proposals",
                    dir.file("s_props.json")});
  EXPECT_EQ(r.code, cli::kExitOk) << r.out;
  EXPECT_NE(r.out.find("0 violations"), std::string::npos) << r.out;

  Json gt = testkit::hand_case_gt();
  Json crowd = gt["annotations"][0];
  crowd["id"] = 17;
  crowd["iscrowd"] = 1;
  crowd["segmentation"] = {{"size", {100, 100}}, {"counts", {10, 20}}};
  gt["annotations"].push_back(crowd);
  r = run_cli({"validate", "--gt", dir.write("rle.json", gt)});
  EXPECT_EQ(r.code, cli::kExitValidation);
  EXPECT_NE(r.out.find("1 violation\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("annotation 17"), std::string::npos) << r.out;

  gt = testkit::hand_case_gt();
  gt["annotations"][0]["segmentation"] = {{0, 0, 10, 0}};
  r = run_cli({"validate", "--gt", dir.write("poly.json", gt)});
  EXPECT_EQ(r.code, cli::kExitValidation);
  EXPECT_NE(r.out.find("annotation 1"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("polygon"), std::string::npos) << r.out;
}

TEST(Cli, ValidateCrossChecksResults) {
  TempDir dir("cli_validate_res");
  const auto gt = dir.write("gt.json", testkit::hand_case_gt());
  Json res = testkit::hand_case_results();
  res[1]["image_id"] = 3;
  res[0]["score"] = "high";
  const auto r = run_cli({"validate", "--gt", gt, "--results", dir.write("res.json", res)});
  EXPECT_EQ(r.code, cli::kExitValidation);
  EXPECT_NE(r.out.find("2 violations"), std::string::npos) << r.out;
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run_cli({}).code, cli::kExitIo);
  EXPECT_EQ(run_cli({"frobnicate"}).code, cli::kExitIo);
  EXPECT_EQ(run_cli({"validate"}).code, cli::kExitIo);
  EXPECT_EQ(run_cli({"--help"}).code, cli::kExitOk);
}
