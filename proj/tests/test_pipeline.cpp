#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sys/wait.h>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sct/config.hpp"
#include "sct/pipeline.hpp"

using namespace sct;
namespace fs = std::filesystem;

namespace {

// Desk-scale-in-miniature configuration so the whole pipeline runs in
// seconds: 48x48 grid, short scan, small dictionary, 3 outer iterations.
nlohmann::json tiny_config_json(const std::string& out_dir) {
  nlohmann::json j;
  j["phantom"] = {
      {"rows", 48},
      {"cols", 48},
      {"pixel_size_cm", 0.1},
      {"materials",
       {{{"name", "water"}, {"density", 1.0}},
        {{"name", "aluminum"}, {"density", 2.699}},
        {{"name", "iodine_solution"}, {"density", 1.0}}}},
      {"disks",
       {{{"center_row", 23.5}, {"center_col", 23.5}, {"radius", 20}, {"material", "water"}, {"fraction", 1.0}},
        {{"center_row", 16}, {"center_col", 16}, {"radius", 5}, {"material", "water"}, {"fraction", 0.0}},
        {{"center_row", 16}, {"center_col", 16}, {"radius", 5}, {"material", "aluminum"}, {"fraction", 1.0}},
        {{"center_row", 30}, {"center_col", 30}, {"radius", 5}, {"material", "water"}, {"fraction", 0.0}},
        {{"center_row", 30}, {"center_col", 30}, {"radius", 5}, {"material", "iodine_solution"}, {"fraction", 1.0}}}}};
  j["geometry"] = {{"n_angles", 90}, {"n_detectors", 96}, {"det_spacing_cm", 0.08}};
  j["spectrum"] = {{"table", std::string(SCT_DATA_DIR) + "/attenuation.csv"}};
  j["noise"] = {{"enabled", true}, {"seed", 11}, {"i0", 20000.0}};
  j["dictionary"] = {{"n_patches", 600},
                     {"patch_size", 6},
                     {"n_atoms", 60},
                     {"train_sparsity", 4},
                     {"train_iters", 10}};
  j["dlimd"] = {{"eta", 0.01}, {"sparsity", 5}, {"eps", {0.08, 0.08, 0.08}},
                {"outer_iters", 3}};
  j["tvmd"] = {{"lambda", 3e-4}, {"inner_iters", 15}};
  j["rois"] = {
      {"basis",
       {{{"name", "b-water"}, {"material", "water"}, {"rect", {22, 10, 8, 8}}},
        {{"name", "b-al"}, {"material", "aluminum"}, {"rect", {13, 13, 6, 6}}},
        {{"name", "b-io"}, {"material", "iodine_solution"}, {"rect", {27, 27, 6, 6}}}}},
      {"eval",
       {{{"name", "roi-al"}, {"material", "aluminum"}, {"rect", {11, 11, 10, 10}}},
        {{"name", "roi-io"}, {"material", "iodine_solution"}, {"rect", {25, 25, 10, 10}}},
        {{"name", "roi-water"}, {"material", "water"}, {"rect", {22, 8, 10, 10}}}}}};
  j["outputs"] = {{"directory", out_dir}};
  return j;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("full pipeline produces every artifact and is idempotent") {
  const fs::path root = fs::temp_directory_path() / "sct_pipe_full";
  fs::remove_all(root);
  const PipelineConfig cfg =
      PipelineConfig::from_json(tiny_config_json(root.string()), "");

  PipelineOptions opts;
  std::ostringstream log1;
  run_pipeline(cfg, opts, log1);
  const fs::path dir = artifact_dir(cfg);

  for (const char* f :
       {"truth_materials.mdt", "truth_air.mdt", "sinograms.mdt",
        "oracle_basis.csv", "images.mdt", "basis.csv", "basis_stats.json",
        "bootstrap_di.mdt", "dict.mdt", "dict.json", "diwet_materials.mdt",
        "di_materials.mdt", "tvmd_materials.mdt", "dlimd_materials.mdt",
        "report.json", "report.csv"})
    CHECK(fs::exists(dir / f));
  CHECK(fs::exists(dir / "render" / "dlimd_water.pgm"));
  CHECK(!fs::exists(dir / ".lock"));  // released

  // report contains all four methods
  nlohmann::json report;
  std::ifstream(dir / "report.json") >> report;
  std::set<std::string> methods;
  for (const auto& e : report["results"])
    methods.insert(e["method"].get<std::string>());
  CHECK(methods == std::set<std::string>{"diwet", "di", "tvmd", "dlimd"});

  // second run: everything up-to-date
  std::ostringstream log2;
  run_pipeline(cfg, opts, log2);
  CHECK(log2.str().find("simulate: up-to-date") != std::string::npos);
  CHECK(log2.str().find("decompose: up-to-date") != std::string::npos);
  CHECK(log2.str().find("render: up-to-date") != std::string::npos);

  fs::remove_all(root);
}

TEST_CASE("evaluate without decompose raises a dependency error") {
  const fs::path root = fs::temp_directory_path() / "sct_pipe_dep";
  fs::remove_all(root);
  const PipelineConfig cfg =
      PipelineConfig::from_json(tiny_config_json(root.string()), "");
  PipelineOptions opts;
  opts.stages = {Stage::kEvaluate};
  std::ostringstream log;
  CHECK_THROWS_AS(run_pipeline(cfg, opts, log), std::invalid_argument);
  try {
    run_pipeline(cfg, opts, log);
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("simulate") != std::string::npos);
  }
  fs::remove_all(root);
}

TEST_CASE("stale lock file stops a second invocation") {
  const fs::path root = fs::temp_directory_path() / "sct_pipe_lock";
  fs::remove_all(root);
  const PipelineConfig cfg =
      PipelineConfig::from_json(tiny_config_json(root.string()), "");
  const fs::path dir = artifact_dir(cfg);
  fs::create_directories(dir);
  std::ofstream(dir / ".lock") << "";
  PipelineOptions opts;
  opts.stages = {Stage::kSimulate};
  std::ostringstream log;
  CHECK_THROWS_AS(run_pipeline(cfg, opts, log), std::invalid_argument);
  fs::remove_all(root);
}

TEST_CASE("cli exit codes follow the scripting contract") {
  const fs::path root = fs::temp_directory_path() / "sct_pipe_cli";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string cli = SCT_CLI_PATH;
  auto run = [&](const std::string& args) {
    const int rc = std::system((cli + " " + args + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(rc);
  };

  // 2: usage errors (unknown flag, missing config value, bad config schema)
  CHECK(run("decompose") == 2);
  CHECK(run("frobnicate --config x.json") == 2);
  const fs::path bad_schema = root / "bad.json";
  std::ofstream(bad_schema) << R"({"bogus_section": 1})";
  CHECK(run("simulate --config " + bad_schema.string()) == 2);

  // 3: data/format errors (unreadable config file)
  CHECK(run("simulate --config " + (root / "missing.json").string()) == 3);

  // 0: a successful stage run
  const fs::path ok_cfg = root / "ok.json";
  std::ofstream(ok_cfg) << tiny_config_json((root / "out").string());
  CHECK(run("simulate --config " + ok_cfg.string()) == 0);
  fs::remove_all(root);
}

TEST_CASE("identical configs produce byte-identical artifacts") {
  const fs::path root_a = fs::temp_directory_path() / "sct_pipe_rep_a";
  const fs::path root_b = fs::temp_directory_path() / "sct_pipe_rep_b";
  fs::remove_all(root_a);
  fs::remove_all(root_b);

  nlohmann::json j = tiny_config_json(root_a.string());
  const PipelineConfig cfg_a = PipelineConfig::from_json(j, "");
  j["outputs"]["directory"] = root_b.string();
  const PipelineConfig cfg_b = PipelineConfig::from_json(j, "");
  CHECK(cfg_a.config_hash() == cfg_b.config_hash());

  PipelineOptions opts;
  std::ostringstream log;
  run_pipeline(cfg_a, opts, log);
  run_pipeline(cfg_b, opts, log);

  const fs::path dir_a = artifact_dir(cfg_a);
  const fs::path dir_b = artifact_dir(cfg_b);
  for (const char* f : {"sinograms.mdt", "images.mdt", "dict.mdt",
                        "dlimd_materials.mdt", "report.json"})
    CHECK(slurp(dir_a / f) == slurp(dir_b / f));

  fs::remove_all(root_a);
  fs::remove_all(root_b);
}
