#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>
#include <string>
#include <vector>

#include "propeval/cli.hpp"
#include "propeval/model.hpp"

namespace propeval::testkit {

// One 10x10 box, one detection with IoU exactly 0.6 and one that misses.
inline Json hand_case_gt() {
  return Json::parse(R"({
    "images": [{"id": 1, "width": 100, "height": 100}],
    "categories": [{"id": 1, "name": "thing"}],
    "annotations": [{"id": 1, "image_id": 1, "category_id": 1, "bbox": [0, 0, 10, 10],
                     "area": 100, "iscrowd": 0,
                     "segmentation": [[0, 0, 10, 0, 10, 10, 0, 10]]}]
  })");
}

inline Json hand_case_results() {
  return Json::parse(R"([
    {"image_id": 1, "category_id": 1, "bbox": [0, 0, 10, 6], "score": 0.9},
    {"image_id": 1, "category_id": 1, "bbox": [50, 50, 10, 10], "score": 0.8}
  ])");
}

// Fresh scratch directory per test, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("propeval_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }

  std::string write(const std::string& name, const Json& doc) const {
    return write_text(name, doc.dump());
  }
  std::string write_text(const std::string& name, const std::string& text) const {
    std::ofstream(file(name), std::ios::binary) << text;
    return file(name);
  }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

inline CliResult run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace propeval::testkit
