#ifndef SCT_CONFIG_HPP
#define SCT_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sct/attenuation.hpp"
#include "sct/decompose.hpp"
#include "sct/dictionary.hpp"
#include "sct/phantom.hpp"
#include "sct/recon.hpp"

namespace sct {

struct MaterialSpec {
  std::string name;
  double density = 1.0;  // grams of tabulated material per cm^3 at fraction 1
};

struct RoiRect {
  int r0 = 0, c0 = 0, height = 0, width = 0;
};

struct RoiSpec {
  std::string name;
  std::string material;
  std::optional<RoiRect> rect;
  std::vector<int> pixels;  // row-major linear indices (alternative to rect)

  std::vector<int> resolve(int rows, int cols) const;
};

/// The whole pipeline configuration, parsed from JSON with strict schema
/// validation: unknown keys are rejected, missing keys fall back to the
/// defaults below. Relative paths resolve against the config file directory.
struct PipelineConfig {
  // phantom
  PhantomSpec phantom;
  std::vector<MaterialSpec> materials;

  // geometry (grid and pixel size are taken from the phantom)
  Geometry geometry;

  // spectrum
  std::string table_path = "data/attenuation.csv";
  std::string table_path_resolved;
  SpectrumBins bins;

  // noise
  bool noise_enabled = true;
  std::uint64_t seed = 0;
  double default_i0 = 5000.0;
  double count_floor = 0.5;

  // dictionary training (seed is derived from the pipeline seed unless the
  // config pins one)
  TrainConfig dictionary;
  bool dictionary_seed_set = false;

  // decomposition parameters (tvmd lambda/inner iterations live in
  // DlimdParams as tv_lambda / tv_inner_iters)
  DlimdParams dlimd;

  // regions of interest
  std::vector<RoiSpec> basis_rois;  // one per material, pure regions
  std::vector<RoiSpec> eval_rois;

  // outputs
  std::string out_dir = "out";
  std::vector<std::pair<double, double>> material_windows;  // render windows

  static PipelineConfig from_json_file(const std::string& path);
  static PipelineConfig from_json(const nlohmann::json& j,
                                  const std::string& base_dir);

  /// Normalized re-serialization (defaults filled in, keys sorted).
  nlohmann::json to_json() const;

  /// FNV-1a hash of the normalized config with the output directory
  /// excluded, so moving artifacts does not invalidate them.
  std::string config_hash() const;

  int n_materials() const { return static_cast<int>(materials.size()); }
  int material_index(const std::string& name) const;

  /// Cross-field checks (ROIs inside the grid, eps length, bin coverage...).
  void validate() const;
};

}  // namespace sct

#endif
