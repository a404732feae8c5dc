#ifndef SCT_PIPELINE_HPP
#define SCT_PIPELINE_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "sct/config.hpp"

namespace sct {

enum class Stage {
  kSimulate,
  kFbp,
  kBasis,
  kTrainDict,
  kDecompose,
  kEvaluate,
  kRender,
};

const std::vector<Stage>& all_stages();
std::string stage_name(Stage s);

struct PipelineOptions {
  std::vector<Stage> stages;  // empty = all, in dependency order
  bool force = false;
  std::string method;  // decompose: one of diwet|di|tvmd|dlimd, empty = all
};

/// Runs the requested stages against the config's artifact directory
/// (<outputs.directory>/cfg-<hash>). A stage whose outputs already exist for
/// this config hash reports "up-to-date" and is skipped unless force is set.
/// The invocation holds an exclusive lock file in the artifact directory.
/// Missing dependency artifacts raise std::invalid_argument naming the stage
/// that produces them.
void run_pipeline(const PipelineConfig& cfg, const PipelineOptions& opts,
                  std::ostream& log);

/// The artifact directory for a config: <outputs.directory>/cfg-<hash>.
std::string artifact_dir(const PipelineConfig& cfg);

}  // namespace sct

#endif
