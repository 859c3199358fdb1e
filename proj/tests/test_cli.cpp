#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "detkit/augment.hpp"
#include "detkit/image.hpp"
#include "detkit/io.hpp"
#include "detkit/rng.hpp"
#include "doctest.h"
#include "testutil.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

CliResult run_cli(const std::string& args, const fs::path& scratch) {
  const fs::path log = scratch / "cli-output.log";
  const std::string command =
      std::string(DETKIT_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int raw = std::system(command.c_str());
  CliResult result;
  result.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  std::ifstream stream(log);
  result.output.assign(std::istreambuf_iterator<char>(stream),
                       std::istreambuf_iterator<char>());
  return result;
}

void write_file(const fs::path& path, const std::string& content) {
  detkit::write_text_file(path, content);
}

std::string slurp(const fs::path& path) { return detkit::read_text_file(path); }

}  // namespace

TEST_CASE("every subcommand answers --help with exit 0") {
  testutil::TempDir tmp("cli-help");
  CHECK(run_cli("--help", tmp.path).exit_code == 0);
  for (const char* sub :
       {"fuse", "eval", "ensemble", "select", "stats", "report", "augment"}) {
    const CliResult result = run_cli(std::string(sub) + " --help", tmp.path);
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("Usage") != std::string::npos);
  }
}

TEST_CASE("usage errors exit with code 2") {
  testutil::TempDir tmp("cli-usage");
  CHECK(run_cli("", tmp.path).exit_code == 2);
  CHECK(run_cli("no-such-command", tmp.path).exit_code == 2);
  CHECK(run_cli("fuse --nope", tmp.path).exit_code == 2);
  CHECK(run_cli("eval", tmp.path).exit_code == 2);  // missing required --gt
}

TEST_CASE("validation errors exit with code 1 and a single-line diagnostic") {
  testutil::TempDir tmp("cli-diag");
  fs::create_directories(tmp.path / "gt");
  fs::create_directories(tmp.path / "preds");
  write_file(tmp.path / "gt/a.txt", "0 0.5 0.5 0.2 0.2\n");
  write_file(tmp.path / "preds/a.txt", "0 0.5 0.5 0.2 0.2 1.7\n");
  const CliResult result = run_cli(
      "eval --preds " + (tmp.path / "preds").string() + " --gt " + (tmp.path / "gt").string(),
      tmp.path);
  CHECK(result.exit_code == 1);
  CHECK(result.output.find("error: confidence-out-of-range") != std::string::npos);
  CHECK(result.output.find('\n') == result.output.size() - 1);  // one line
}

TEST_CASE("fuse then eval on an identity fixture reports mAP 1.000") {
  testutil::TempDir tmp("cli-pipeline");
  fs::create_directories(tmp.path / "gt");
  fs::create_directories(tmp.path / "preds");
  const std::string boxes_a = "0 0.300000 0.300000 0.200000 0.200000\n"
                              "1 0.700000 0.700000 0.200000 0.200000\n";
  const std::string boxes_b = "2 0.500000 0.500000 0.400000 0.300000\n";
  write_file(tmp.path / "gt/a.txt", boxes_a);
  write_file(tmp.path / "gt/b.txt", boxes_b);
  write_file(tmp.path / "preds/a.txt",
             "0 0.300000 0.300000 0.200000 0.200000 0.900000\n"
             "0 0.310000 0.300000 0.200000 0.200000 0.400000\n"  // duplicate, suppressed
             "1 0.700000 0.700000 0.200000 0.200000 0.800000\n");
  write_file(tmp.path / "preds/b.txt", "2 0.500000 0.500000 0.400000 0.300000 0.950000\n");

  const CliResult fuse = run_cli("fuse --method nms --preds " + (tmp.path / "preds").string() +
                                     " --out " + (tmp.path / "fused").string(),
                                 tmp.path);
  CHECK(fuse.exit_code == 0);
  REQUIRE(fs::exists(tmp.path / "fused/a.txt"));

  const CliResult eval = run_cli(
      "eval --preds " + (tmp.path / "fused").string() + " --gt " + (tmp.path / "gt").string() +
          " --iou 0.5 --json " + (tmp.path / "report.json").string() + " --md " +
          (tmp.path / "report.md").string(),
      tmp.path);
  CHECK(eval.exit_code == 0);
  CHECK(eval.output.find("mAP 1.000") != std::string::npos);
  CHECK(slurp(tmp.path / "report.md").find("1.000") != std::string::npos);

  const detkit::EvalReport report = detkit::report_from_json(
      slurp(tmp.path / "report.json"), detkit::ClassRegistry::default_registry());
  CHECK(report.map == 1.0);
}

TEST_CASE("eval accepts coco-style detection json") {
  testutil::TempDir tmp("cli-coco");
  fs::create_directories(tmp.path / "gt");
  write_file(tmp.path / "gt/img1.txt", "2 0.500000 0.500000 0.400000 0.400000\n");
  // same box in absolute pixel terms of the unit frame
  write_file(tmp.path / "dets.json",
             R"([{"image_id":"img1","category_id":2,"bbox":[0.3,0.3,0.4,0.4],"score":0.9}])");
  const CliResult result = run_cli(
      "eval --coco " + (tmp.path / "dets.json").string() + " --gt " +
          (tmp.path / "gt").string() + " --json " + (tmp.path / "r.json").string(),
      tmp.path);
  CHECK(result.exit_code == 0);
  const detkit::EvalReport report = detkit::report_from_json(
      slurp(tmp.path / "r.json"), detkit::ClassRegistry::default_registry());
  CHECK(report.map == 1.0);
}

TEST_CASE("fuse output is byte-identical across runs") {
  testutil::TempDir tmp("cli-determinism");
  fs::create_directories(tmp.path / "m1");
  fs::create_directories(tmp.path / "m2");
  write_file(tmp.path / "m1/img.txt",
             "0 0.400000 0.400000 0.200000 0.200000 0.600000\n"
             "1 0.700000 0.200000 0.100000 0.100000 0.500000\n");
  write_file(tmp.path / "m2/img.txt", "0 0.420000 0.420000 0.200000 0.200000 0.300000\n");

  const std::string base = "fuse --method wbf --iou 0.55 --preds " +
                           (tmp.path / "m1").string() + " " + (tmp.path / "m2").string();
  CHECK(run_cli(base + " --out " + (tmp.path / "out1").string(), tmp.path).exit_code == 0);
  CHECK(run_cli(base + " --out " + (tmp.path / "out2").string(), tmp.path).exit_code == 0);
  CHECK(slurp(tmp.path / "out1/img.txt") == slurp(tmp.path / "out2/img.txt"));
}

TEST_CASE("ensemble evaluates pooled members") {
  testutil::TempDir tmp("cli-ensemble");
  fs::create_directories(tmp.path / "gt");
  fs::create_directories(tmp.path / "ma");
  fs::create_directories(tmp.path / "mb");
  write_file(tmp.path / "gt/x.txt",
             "0 0.300000 0.300000 0.200000 0.200000\n"
             "1 0.700000 0.700000 0.200000 0.200000\n");
  // each model finds one class
  write_file(tmp.path / "ma/x.txt", "0 0.300000 0.300000 0.200000 0.200000 0.900000\n");
  write_file(tmp.path / "mb/x.txt", "1 0.700000 0.700000 0.200000 0.200000 0.900000\n");

  const CliResult result = run_cli(
      "ensemble --method wbf --preds " + (tmp.path / "ma").string() + " " +
          (tmp.path / "mb").string() + " --gt " + (tmp.path / "gt").string() + " --json " +
          (tmp.path / "ens.json").string(),
      tmp.path);
  CHECK(result.exit_code == 0);
  const detkit::EvalReport report = detkit::report_from_json(
      slurp(tmp.path / "ens.json"), detkit::ClassRegistry::default_registry());
  CHECK(report.map == 1.0);
}

TEST_CASE("select reproduces the reference ensemble members") {
  testutil::TempDir tmp("cli-select");
  const fs::path sweep = fs::path(DETKIT_DATA_DIR) / "reference/sweep.json";
  const CliResult result =
      run_cli("select --sweep " + sweep.string() +
                  " --baseline default --margin 0.005 --out " +
                  (tmp.path / "spec.json").string(),
              tmp.path);
  CHECK(result.exit_code == 0);
  CHECK(result.output.find("members: default angle-45 vertical-flipping-0.5") !=
        std::string::npos);

  const detkit::EnsembleSpec spec =
      detkit::ensemble_spec_from_json(slurp(tmp.path / "spec.json"));
  CHECK(spec.member_ids ==
        std::vector<std::string>({"default", "angle-45", "vertical-flipping-0.5"}));
  CHECK(spec.fusion.model_count == 3);
}

TEST_CASE("stats renders the split table") {
  testutil::TempDir tmp("cli-stats");
  fs::create_directories(tmp.path / "labels");
  write_file(tmp.path / "labels/a.txt", "1 0.5 0.5 0.2 0.2\n1 0.2 0.2 0.1 0.1\n");
  write_file(tmp.path / "labels/b.txt", "4 0.5 0.5 0.2 0.2\n");
  detkit::DatasetManifest manifest;
  manifest.splits[detkit::Split::Train] = {
      {tmp.path / "images/a.png", tmp.path / "labels/a.txt", {100, 100}},
      {tmp.path / "images/b.png", tmp.path / "labels/b.txt", {100, 100}}};
  detkit::save_dataset_manifest(manifest, tmp.path / "manifest.json");

  const CliResult result =
      run_cli("stats --manifest " + (tmp.path / "manifest.json").string() + " --csv " +
                  (tmp.path / "stats.csv").string(),
              tmp.path);
  CHECK(result.exit_code == 0);
  CHECK(result.output.find("| gap | 2 |") != std::string::npos);
  CHECK(result.output.find("| total images | 2 |") != std::string::npos);
  CHECK(slurp(tmp.path / "stats.csv").find("gap,2") != std::string::npos);
}

TEST_CASE("report renders bundled reports with the baseline rule") {
  testutil::TempDir tmp("cli-report");
  const fs::path reports = fs::path(DETKIT_DATA_DIR) / "reference/reports";
  const CliResult result = run_cli(
      "report default=" + (reports / "default-nms.json").string() +
          " best=" + (reports / "best-ensemble-wbf.json").string() +
          " --baseline default --csv " + (tmp.path / "table.csv").string(),
      tmp.path);
  CHECK(result.exit_code == 0);
  CHECK(result.output.find("**0.868**") != std::string::npos);
  CHECK(slurp(tmp.path / "table.csv").find("best,0.500,0.878") != std::string::npos);
}

TEST_CASE("augment writes a deterministic dataset") {
  testutil::TempDir tmp("cli-augment");
  fs::create_directories(tmp.path / "images");
  fs::create_directories(tmp.path / "labels");

  detkit::RandomStream stream(64);
  detkit::DatasetManifest manifest;
  for (int i = 0; i < 3; ++i) {
    const std::string stem = "img" + std::to_string(i);
    detkit::ImageBuffer img = detkit::ImageBuffer::filled(32, 32, 0);
    for (std::uint8_t& byte : img.data) {
      byte = static_cast<std::uint8_t>(stream.index(256));
    }
    detkit::write_png(img, tmp.path / "images" / (stem + ".png"));
    write_file(tmp.path / "labels" / (stem + ".txt"),
               "0 0.500000 0.500000 0.250000 0.250000\n");
    manifest.splits[detkit::Split::Train].push_back(
        {tmp.path / "images" / (stem + ".png"), tmp.path / "labels" / (stem + ".txt"),
         {32, 32}});
  }
  detkit::save_dataset_manifest(manifest, tmp.path / "manifest.json");

  detkit::AugmentPipeline pipeline;
  pipeline.seed = 7;
  pipeline.ops = {detkit::AugmentOp{detkit::AugmentKind::Mosaic, 1.0, 0, 0, 0, 0},
                  detkit::AugmentOp{detkit::AugmentKind::VFlip, 0.5, 0, 0, 0, 0},
                  detkit::AugmentOp{detkit::AugmentKind::Rotate, 1.0, 30.0, 0, 0, 0}};
  write_file(tmp.path / "pipeline.json", detkit::pipeline_to_json(pipeline));

  const std::string base = "augment --manifest " + (tmp.path / "manifest.json").string() +
                           " --split train --pipeline " +
                           (tmp.path / "pipeline.json").string();
  CHECK(run_cli(base + " --out " + (tmp.path / "out1").string(), tmp.path).exit_code == 0);
  CHECK(run_cli(base + " --out " + (tmp.path / "out2").string(), tmp.path).exit_code == 0);

  for (int i = 0; i < 3; ++i) {
    const std::string stem = "img" + std::to_string(i);
    CHECK(slurp(tmp.path / "out1/images" / (stem + ".png")) ==
          slurp(tmp.path / "out2/images" / (stem + ".png")));
    CHECK(slurp(tmp.path / "out1/labels" / (stem + ".txt")) ==
          slurp(tmp.path / "out2/labels" / (stem + ".txt")));
  }
  // mosaic doubled the canvas
  const detkit::ImageBuffer out = detkit::read_png(tmp.path / "out1/images/img0.png");
  CHECK(out.width == 64);
  CHECK(out.height == 64);
}
