#include "sct/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "sct/denoise.hpp"
#include "sct/errors.hpp"
#include "sct/ksvd.hpp"
#include "sct/metrics.hpp"
#include "sct/simulate.hpp"
#include "sct/tensor_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace sct {

namespace {

const std::vector<std::string> kMethods = {"diwet", "di", "tvmd", "dlimd"};

struct LockFile {
  fs::path path;
  explicit LockFile(const fs::path& dir) : path(dir / ".lock") {
    if (fs::exists(path))
      throw std::invalid_argument(
          "pipeline: " + path.string() +
          " exists; another invocation owns this output directory "
          "(remove the lock file if it is stale)");
    std::ofstream out(path);
    if (!out) throw FormatError("pipeline: cannot create " + path.string());
  }
  ~LockFile() {
    std::error_code ec;
    fs::remove(path, ec);
  }
};

json load_manifest(const fs::path& dir) {
  const fs::path p = dir / "manifest.json";
  if (!fs::exists(p)) return json::object();
  std::ifstream in(p);
  json j;
  try {
    in >> j;
  } catch (const json::exception&) {
    return json::object();
  }
  return j;
}

void save_manifest(const fs::path& dir, const json& manifest) {
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  out << manifest.dump(2) << "\n";
}

// Stage bookkeeping: outputs of each stage, for up-to-date and dependency
// checks.
std::vector<std::string> stage_outputs(Stage s, const std::string& method) {
  switch (s) {
    case Stage::kSimulate:
      return {"truth_materials.mdt", "truth_air.mdt", "sinograms.mdt",
              "oracle_basis.csv"};
    case Stage::kFbp:
      return {"images.mdt"};
    case Stage::kBasis:
      return {"basis.csv", "basis_stats.json"};
    case Stage::kTrainDict:
      return {"bootstrap_di.mdt", "dict.mdt", "dict.json"};
    case Stage::kDecompose: {
      std::vector<std::string> files;
      for (const auto& m : kMethods) {
        if (!method.empty() && m != method) continue;
        files.push_back(m + "_materials.mdt");
        files.push_back(m + "_air.mdt");
        files.push_back(m + "_airmask.mdt");
        files.push_back(m + "_log.json");
      }
      return files;
    }
    case Stage::kEvaluate:
      return {"report.json", "report.csv"};
    case Stage::kRender:
      return {"render"};
  }
  return {};
}

bool outputs_present(const fs::path& dir, Stage s, const std::string& method) {
  for (const auto& f : stage_outputs(s, method))
    if (!fs::exists(dir / f)) return false;
  return true;
}

void require_artifact(const fs::path& dir, const std::string& file,
                      const std::string& producer) {
  if (!fs::exists(dir / file))
    throw std::invalid_argument("pipeline: missing " + file +
                                "; run the '" + producer + "' stage first");
}

Eigen::MatrixXd read_basis_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("pipeline: cannot open " + path.string());
  std::string line;
  std::getline(in, line);  // header (material names)
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      const std::size_t next = line.find(',', pos);
      const std::string tok = line.substr(
          pos, next == std::string::npos ? std::string::npos : next - pos);
      try {
        row.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw FormatError("pipeline: bad number in " + path.string());
      }
      if (next == std::string::npos) break;
      pos = next + 1;
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError("pipeline: empty basis in " + path.string());
  Eigen::MatrixXd m(rows.size(), rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size())
      throw FormatError("pipeline: ragged basis in " + path.string());
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

void write_basis_csv(const fs::path& path, const Eigen::MatrixXd& basis,
                     const std::vector<MaterialSpec>& materials) {
  std::ofstream out(path, std::ios::trunc);
  for (std::size_t m = 0; m < materials.size(); ++m)
    out << materials[m].name << (m + 1 < materials.size() ? "," : "\n");
  out.precision(17);
  for (Eigen::Index n = 0; n < basis.rows(); ++n)
    for (Eigen::Index m = 0; m < basis.cols(); ++m)
      out << basis(n, m) << (m + 1 < basis.cols() ? "," : "\n");
}

RoiMask basis_mask(const PipelineConfig& cfg) {
  RoiMask mask;
  mask.pixels.resize(cfg.n_materials());
  for (const auto& roi : cfg.basis_rois)
    mask.pixels[cfg.material_index(roi.material)] =
        roi.resolve(cfg.phantom.rows, cfg.phantom.cols);
  return mask;
}

Tensor3 sinos_to_tensor(const std::vector<Eigen::MatrixXd>& sinos) {
  const int v = static_cast<int>(sinos[0].rows());
  const int c = static_cast<int>(sinos[0].cols());
  Tensor3 t(v, c, static_cast<int>(sinos.size()));
  for (std::size_t n = 0; n < sinos.size(); ++n)
    t.set_channel(static_cast<int>(n), sinos[n]);
  return t;
}

json iteration_log_json(const DecompositionResult& res) {
  json iters = json::array();
  for (const auto& it : res.iterations) {
    json e;
    e["fstep_before"] = std::isnan(it.fstep_before)
                            ? json(nullptr)
                            : json(it.fstep_before);
    e["fstep_after"] = it.fstep_after;
    e["data_term"] = it.data_term;
    e["coupling_term"] = it.coupling_term;
    e["patch_term"] = it.patch_term;
    e["code_l0"] = it.code_l0;
    e["total_objective"] = it.total_objective;
    iters.push_back(e);
  }
  return json{{"iterations", iters}};
}

void run_simulate(const PipelineConfig& cfg, const fs::path& dir) {
  const auto table = MassAttenuationTable::load_csv(cfg.table_path_resolved);
  std::vector<std::string> names;
  std::vector<double> densities;
  for (const auto& m : cfg.materials) {
    names.push_back(m.name);
    densities.push_back(m.density);
  }
  const Eigen::MatrixXd basis_true =
      build_attenuation_matrix_true(table, cfg.bins, names, densities);
  const Phantom phantom = make_phantom(cfg.phantom);
  const CountData counts =
      synthesize_counts(phantom.materials, basis_true, cfg.geometry, cfg.bins,
                        cfg.noise_enabled, cfg.seed);
  const auto sinos = log_normalize(counts, cfg.bins, cfg.count_floor);

  write_tensor(phantom.materials, (dir / "truth_materials.mdt").string(),
               "f64", "fraction");
  Tensor3 air_t(phantom.air.rows(), phantom.air.cols(), 1);
  air_t.set_channel(0, phantom.air);
  write_tensor(air_t, (dir / "truth_air.mdt").string(), "f64", "fraction");
  write_tensor(sinos_to_tensor(sinos), (dir / "sinograms.mdt").string(), "f64",
               "log-ratio");
  write_basis_csv(dir / "oracle_basis.csv", basis_true, cfg.materials);
}

void run_fbp(const PipelineConfig& cfg, const fs::path& dir) {
  require_artifact(dir, "sinograms.mdt", "simulate");
  const Tensor3 sinos = read_tensor((dir / "sinograms.mdt").string());
  Tensor3 images(cfg.phantom.rows, cfg.phantom.cols, sinos.channels());
  for (int n = 0; n < sinos.channels(); ++n)
    images.set_channel(n, fbp(sinos.channel(n), cfg.geometry));
  write_tensor(images, (dir / "images.mdt").string(), "f64", "cm^-1");
}

void run_basis(const PipelineConfig& cfg, const fs::path& dir) {
  require_artifact(dir, "images.mdt", "fbp");
  const Tensor3 images = read_tensor((dir / "images.mdt").string());
  const BasisEstimate est = estimate_attenuation_matrix(images, basis_mask(cfg));
  write_basis_csv(dir / "basis.csv", est.matrix, cfg.materials);
  json stats{{"condition_number", est.condition_number}};
  json stddev = json::array();
  for (Eigen::Index n = 0; n < est.stddev.rows(); ++n) {
    json row = json::array();
    for (Eigen::Index m = 0; m < est.stddev.cols(); ++m)
      row.push_back(est.stddev(n, m));
    stddev.push_back(row);
  }
  stats["stddev"] = stddev;
  std::ofstream out(dir / "basis_stats.json", std::ios::trunc);
  out << stats.dump(2) << "\n";
}

void run_train_dict(const PipelineConfig& cfg, const fs::path& dir) {
  require_artifact(dir, "images.mdt", "fbp");
  require_artifact(dir, "basis.csv", "basis");
  const Tensor3 images = read_tensor((dir / "images.mdt").string());
  const Eigen::MatrixXd basis = read_basis_csv(dir / "basis.csv");

  const DecompositionResult boot = di(images, basis, cfg.dlimd.air);
  write_tensor(boot.materials, (dir / "bootstrap_di.mdt").string(), "f64",
               "fraction");

  // Air pixels of the bootstrap hold raw pseudo-inverse noise; they carry no
  // material, so the training set sees them as zero.
  Tensor3 train_input = boot.materials;
  {
    const int n_mat = train_input.channels();
    const long n_px = static_cast<long>(train_input.rows()) * train_input.cols();
    for (long px = 0; px < n_px; ++px)
      if (boot.air_mask[px])
        for (int m = 0; m < n_mat; ++m) train_input.data()[px * n_mat + m] = 0.0;
  }
  const TrainingSet training = build_training_set(train_input, cfg.dictionary);
  const KsvdResult trained = ksvd_train(training.patches, cfg.dictionary);

  Tensor3 dict_t(trained.dictionary.signal_size(),
                 trained.dictionary.atom_count(), 1);
  dict_t.set_channel(0, trained.dictionary.atoms);
  write_tensor(dict_t, (dir / "dict.mdt").string(), "f64", "atom");

  json sidecar{{"patch_size", cfg.dictionary.patch_size},
               {"n_patches", cfg.dictionary.n_patches},
               {"n_atoms", cfg.dictionary.n_atoms},
               {"train_sparsity", cfg.dictionary.train_sparsity},
               {"train_iters", cfg.dictionary.train_iters},
               {"seed", cfg.dictionary.seed},
               {"sampled_with_replacement", training.with_replacement},
               {"objective",
                std::vector<double>(trained.objective.data(),
                                    trained.objective.data() +
                                        trained.objective.size())}};
  std::ofstream out(dir / "dict.json", std::ios::trunc);
  out << sidecar.dump(2) << "\n";
}

Dictionary load_dictionary(const fs::path& dir) {
  require_artifact(dir, "dict.mdt", "train-dict");
  require_artifact(dir, "dict.json", "train-dict");
  const Tensor3 t = read_tensor((dir / "dict.mdt").string());
  std::ifstream in(dir / "dict.json");
  json sidecar;
  in >> sidecar;
  Dictionary dict;
  dict.atoms = t.channel(0);
  dict.patch_size = sidecar.at("patch_size").get<int>();
  dict.validate();
  return dict;
}

void write_decomposition(const fs::path& dir, const std::string& method,
                         const DecompositionResult& res) {
  write_tensor(res.materials, (dir / (method + "_materials.mdt")).string(),
               "f64", "fraction");
  Tensor3 air_t(res.air.rows(), res.air.cols(), 1);
  air_t.set_channel(0, res.air);
  write_tensor(air_t, (dir / (method + "_air.mdt")).string(), "f64",
               "fraction");
  Tensor3 mask_t(res.air.rows(), res.air.cols(), 1);
  for (Eigen::Index r = 0; r < res.air.rows(); ++r)
    for (Eigen::Index c = 0; c < res.air.cols(); ++c)
      mask_t(static_cast<int>(r), static_cast<int>(c), 0) =
          res.air_mask[static_cast<std::size_t>(r) * res.air.cols() + c];
  write_tensor(mask_t, (dir / (method + "_airmask.mdt")).string(), "f64",
               "boolean");
  std::ofstream out(dir / (method + "_log.json"), std::ios::trunc);
  out << iteration_log_json(res).dump(2) << "\n";
}

void run_decompose(const PipelineConfig& cfg, const fs::path& dir,
                   const std::string& method) {
  require_artifact(dir, "images.mdt", "fbp");
  require_artifact(dir, "basis.csv", "basis");
  const Tensor3 images = read_tensor((dir / "images.mdt").string());
  const Eigen::MatrixXd basis = read_basis_csv(dir / "basis.csv");

  for (const auto& m : kMethods) {
    if (!method.empty() && m != method) continue;
    DecompositionResult res;
    if (m == "diwet") {
      res = diwet(images, basis);
    } else if (m == "di") {
      res = di(images, basis, cfg.dlimd.air);
    } else if (m == "tvmd") {
      res = tvmd(images, basis, cfg.dlimd);
    } else {
      const Dictionary dict = load_dictionary(dir);
      res = dlimd(images, basis, dict, cfg.dlimd);
    }
    write_decomposition(dir, m, res);
  }
}

void run_evaluate(const PipelineConfig& cfg, const fs::path& dir) {
  require_artifact(dir, "truth_materials.mdt", "simulate");
  const Tensor3 truth = read_tensor((dir / "truth_materials.mdt").string());

  json results = json::array();
  for (const auto& roi : cfg.eval_rois) {
    const int mat = cfg.material_index(roi.material);
    const auto px = roi.resolve(cfg.phantom.rows, cfg.phantom.cols);
    const Eigen::MatrixXd truth_plane = truth.channel(mat);
    for (const auto& m : kMethods) {
      require_artifact(dir, m + "_materials.mdt", "decompose");
      const Tensor3 dec = read_tensor((dir / (m + "_materials.mdt")).string());
      const Eigen::MatrixXd plane = dec.channel(mat);
      json entry{{"roi", roi.name}, {"material", roi.material}, {"method", m}};
      entry["mean"] = roi_mean(dec, px, mat);
      entry["true_mean"] = roi_mean(truth, px, mat);
      if (roi.rect) {
        const auto& r = *roi.rect;
        const Eigen::MatrixXd a =
            roi_patch(plane, r.r0, r.c0, r.height, r.width);
        const Eigen::MatrixXd b =
            roi_patch(truth_plane, r.r0, r.c0, r.height, r.width);
        entry["rmse"] = rmse(a, b);
        entry["psnr"] = psnr(a, b, 1.0);
        entry["ssim"] =
            (r.height >= 8 && r.width >= 8) ? json(ssim(a, b)) : json(nullptr);
      } else {
        double acc = 0.0;
        for (int p : px) {
          const double d = dec.data()[static_cast<std::size_t>(p) * dec.channels() + mat] -
                           truth.data()[static_cast<std::size_t>(p) * truth.channels() + mat];
          acc += d * d;
        }
        const double e = std::sqrt(acc / px.size());
        entry["rmse"] = e;
        entry["psnr"] = e == 0.0 ? 300.0 : std::min(300.0, 20.0 * std::log10(1.0 / e));
        entry["ssim"] = nullptr;
      }
      results.push_back(entry);
    }
  }

  json report{
      {"metadata",
       {{"config_hash", cfg.config_hash()},
        {"ssim", {{"window", 8}, {"k1", 0.01}, {"k2", 0.03}, {"peak", 1.0}}},
        {"psnr_peak", 1.0},
        {"methods", kMethods}}},
      {"results", results}};
  {
    std::ofstream out(dir / "report.json", std::ios::trunc);
    out << report.dump(2) << "\n";
  }
  std::ofstream csv(dir / "report.csv", std::ios::trunc);
  csv << "roi,material,method,rmse,psnr,ssim,mean,true_mean\n";
  csv.precision(12);
  for (const auto& e : results) {
    csv << e["roi"].get<std::string>() << ','
        << e["material"].get<std::string>() << ','
        << e["method"].get<std::string>() << ',' << e["rmse"].get<double>()
        << ',' << e["psnr"].get<double>() << ',';
    if (e["ssim"].is_null())
      csv << "";
    else
      csv << e["ssim"].get<double>();
    csv << ',' << e["mean"].get<double>() << ','
        << e["true_mean"].get<double>() << '\n';
  }
}

void run_render(const PipelineConfig& cfg, const fs::path& dir) {
  const fs::path render_dir = dir / "render";
  fs::create_directories(render_dir);

  require_artifact(dir, "images.mdt", "fbp");
  const Tensor3 images = read_tensor((dir / "images.mdt").string());
  for (int n = 0; n < images.channels(); ++n) {
    double hi = images.channel(n).maxCoeff();
    if (!(hi > 0.0)) hi = 1.0;
    render_pgm(images, n, 0.0, hi,
               (render_dir / ("image_bin" + std::to_string(n) + ".pgm")).string());
  }

  for (const auto& m : kMethods) {
    require_artifact(dir, m + "_materials.mdt", "decompose");
    const Tensor3 dec = read_tensor((dir / (m + "_materials.mdt")).string());
    for (int mat = 0; mat < dec.channels(); ++mat) {
      const auto [lo, hi] = cfg.material_windows[mat];
      render_pgm(dec, mat, lo, hi,
                 (render_dir / (m + "_" + cfg.materials[mat].name + ".pgm"))
                     .string());
    }
    const Tensor3 air = read_tensor((dir / (m + "_air.mdt")).string());
    render_pgm(air, 0, 0.0, 1.0, (render_dir / (m + "_air.pgm")).string());
  }
}

}  // namespace

const std::vector<Stage>& all_stages() {
  static const std::vector<Stage> stages = {
      Stage::kSimulate, Stage::kFbp,      Stage::kBasis,  Stage::kTrainDict,
      Stage::kDecompose, Stage::kEvaluate, Stage::kRender,
  };
  return stages;
}

std::string stage_name(Stage s) {
  switch (s) {
    case Stage::kSimulate: return "simulate";
    case Stage::kFbp: return "fbp";
    case Stage::kBasis: return "basis";
    case Stage::kTrainDict: return "train-dict";
    case Stage::kDecompose: return "decompose";
    case Stage::kEvaluate: return "evaluate";
    case Stage::kRender: return "render";
  }
  return "?";
}

std::string artifact_dir(const PipelineConfig& cfg) {
  return (fs::path(cfg.out_dir) / ("cfg-" + cfg.config_hash())).string();
}

void run_pipeline(const PipelineConfig& cfg, const PipelineOptions& opts,
                  std::ostream& log) {
  const fs::path dir = artifact_dir(cfg);
  fs::create_directories(dir);
  LockFile lock(dir);

  {
    std::ofstream out(dir / "config.json", std::ios::trunc);
    out << cfg.to_json().dump(2) << "\n";
  }

  json manifest = load_manifest(dir);
  if (manifest.value("config_hash", "") != cfg.config_hash()) {
    manifest = json{{"config_hash", cfg.config_hash()},
                    {"done", json::object()}};
  }

  const std::vector<Stage>& stages =
      opts.stages.empty() ? all_stages() : opts.stages;
  for (Stage s : stages) {
    const std::string name = stage_name(s);
    const std::string key =
        (s == Stage::kDecompose && !opts.method.empty())
            ? name + ":" + opts.method
            : name;
    const bool done = manifest["done"].value(key, false) ||
                      (s == Stage::kDecompose &&
                       manifest["done"].value(name, false));
    if (!opts.force && done && outputs_present(dir, s, opts.method)) {
      log << name << ": up-to-date\n";
      continue;
    }
    switch (s) {
      case Stage::kSimulate: run_simulate(cfg, dir); break;
      case Stage::kFbp: run_fbp(cfg, dir); break;
      case Stage::kBasis: run_basis(cfg, dir); break;
      case Stage::kTrainDict: run_train_dict(cfg, dir); break;
      case Stage::kDecompose: run_decompose(cfg, dir, opts.method); break;
      case Stage::kEvaluate: run_evaluate(cfg, dir); break;
      case Stage::kRender: run_render(cfg, dir); break;
    }
    manifest["done"][key] = true;
    save_manifest(dir, manifest);
    log << name << ": done\n";
  }
}

}  // namespace sct
