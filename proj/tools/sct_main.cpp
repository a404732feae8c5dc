#include <Eigen/Core>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sct/config.hpp"
#include "sct/errors.hpp"
#include "sct/parallel.hpp"
#include "sct/pipeline.hpp"
#include "sct/tensor_io.hpp"

namespace {

// Exit codes: 0 success, 2 usage/config, 3 data/format, 4 numerical.
constexpr int kExitUsage = 2;
constexpr int kExitFormat = 3;
constexpr int kExitNumerical = 4;

struct CommonArgs {
  std::string config_path;
  bool force = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "pipeline config JSON")
      ->required();
  cmd->add_flag("--force", args.force, "rebuild even when outputs are current");
  cmd->add_option("--seed", args.seed, "override the config seed");
  cmd->add_option("--out", args.out_dir, "override the output directory");
}

sct::PipelineConfig load_config(const CommonArgs& args) {
  sct::PipelineConfig cfg =
      sct::PipelineConfig::from_json_file(args.config_path);
  if (args.seed) {
    cfg.seed = *args.seed;
    if (!cfg.dictionary_seed_set)
      cfg.dictionary.seed =
          cfg.seed * 0x9e3779b97f4a7c15ULL + 0x6a09e667f3bcc909ULL;
  }
  if (args.out_dir) cfg.out_dir = *args.out_dir;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  Eigen::setNbThreads(sct::max_threads());

  CLI::App app{"spectral CT material decomposition pipeline"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string method;
  std::vector<std::pair<std::string, sct::Stage>> stage_cmds = {
      {"simulate", sct::Stage::kSimulate}, {"fbp", sct::Stage::kFbp},
      {"basis", sct::Stage::kBasis},       {"train-dict", sct::Stage::kTrainDict},
      {"decompose", sct::Stage::kDecompose}, {"evaluate", sct::Stage::kEvaluate},
      {"render", sct::Stage::kRender},
  };

  for (auto& [name, stage] : stage_cmds) {
    CLI::App* cmd = app.add_subcommand(name, "run the " + name + " stage");
    add_common(cmd, args);
    if (stage == sct::Stage::kDecompose)
      cmd->add_option("--method", method,
                      "decompose with one method (diwet|di|tvmd|dlimd)")
          ->check(CLI::IsMember({"diwet", "di", "tvmd", "dlimd"}));
  }
  CLI::App* run_cmd = app.add_subcommand("run", "run the whole pipeline");
  add_common(run_cmd, args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    const sct::PipelineConfig cfg = load_config(args);
    sct::PipelineOptions opts;
    opts.force = args.force;
    opts.method = method;
    for (const auto& [name, stage] : stage_cmds)
      if (app.get_subcommand(name)->parsed()) opts.stages.push_back(stage);
    // "run" leaves opts.stages empty: all stages in order.
    sct::run_pipeline(cfg, opts, std::cout);
    std::cout << "artifacts: " << sct::artifact_dir(cfg) << "\n";
    return 0;
  } catch (const sct::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFormat;
  } catch (const sct::NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFormat;
  }
}
