#include "sct/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include "sct/errors.hpp"

namespace sct {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw std::invalid_argument("config: " + path + ": " + msg);
}

void check_keys(const json& obj, const std::string& path,
                const std::set<std::string>& allowed) {
  if (!obj.is_object()) fail(path, "expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key())) fail(path + "." + it.key(), "unknown key");
}

double num(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<int>();
}

std::string str(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

RoiSpec parse_roi(const json& j, const std::string& path) {
  check_keys(j, path, {"name", "material", "rect", "pixels"});
  RoiSpec roi;
  if (j.contains("name")) roi.name = str(j["name"], path + ".name");
  if (j.contains("material"))
    roi.material = str(j["material"], path + ".material");
  if (j.contains("rect")) {
    const auto& r = j["rect"];
    if (!r.is_array() || r.size() != 4)
      fail(path + ".rect", "expected [r0, c0, height, width]");
    roi.rect = RoiRect{integer(r[0], path), integer(r[1], path),
                       integer(r[2], path), integer(r[3], path)};
  }
  if (j.contains("pixels")) {
    if (!j["pixels"].is_array()) fail(path + ".pixels", "expected an array");
    for (const auto& p : j["pixels"])
      roi.pixels.push_back(integer(p, path + ".pixels"));
  }
  if (roi.rect.has_value() == !roi.pixels.empty())
    fail(path, "give exactly one of rect or pixels");
  return roi;
}

json roi_to_json(const RoiSpec& roi) {
  json j;
  if (!roi.name.empty()) j["name"] = roi.name;
  if (!roi.material.empty()) j["material"] = roi.material;
  if (roi.rect)
    j["rect"] = {roi.rect->r0, roi.rect->c0, roi.rect->height,
                 roi.rect->width};
  if (!roi.pixels.empty()) j["pixels"] = roi.pixels;
  return j;
}

PipelineConfig default_config() {
  PipelineConfig cfg;
  cfg.materials = {{"water", 1.0}, {"aluminum", 2.699}, {"iodine_solution", 1.0}};

  cfg.phantom.rows = 256;
  cfg.phantom.cols = 256;
  cfg.phantom.pixel_size_cm = 0.0324;
  cfg.phantom.n_materials = 3;
  // Five-cylinder layout: water body, pure aluminum and reference iodine
  // solution inserts (basis ROIs), one dilute iodine and one half-density
  // aluminum insert. Mixtures are stacked disks of distinct materials.
  cfg.phantom.disks = {
      {128, 128, 100, 0, 1.0},          // water body
      {88, 92, 20, 0, 0.0},             // clear water under the Al insert
      {88, 92, 20, 1, 1.0},             // aluminum insert
      {88, 164, 20, 0, 0.0},            // clear water under the iodine insert
      {88, 164, 20, 2, 1.0},            // reference iodine solution insert
      {170, 92, 20, 0, 0.7647},         // dilute iodine: water part
      {170, 92, 20, 2, 0.2353},         // dilute iodine: solution part
      {170, 164, 20, 0, 0.5},           // half-density aluminum: water part
      {170, 164, 20, 1, 0.5},           // half-density aluminum: Al part
  };

  cfg.geometry.n_angles = 360;
  cfg.geometry.n_detectors = 512;
  cfg.geometry.det_spacing_cm = 0.025;
  cfg.geometry.rows = cfg.phantom.rows;
  cfg.geometry.cols = cfg.phantom.cols;
  cfg.geometry.pixel_size_cm = cfg.phantom.pixel_size_cm;

  cfg.bins.bins = {{40.0, 60.0, 49.0, 5000.0},
                   {60.0, 80.0, 68.0, 5000.0},
                   {80.0, 100.0, 88.0, 5000.0},
                   {100.0, 140.0, 115.0, 5000.0}};

  // eps calibrated per material to the DI-bootstrap noise of the default
  // scenario (I0 = 5e3); tv_lambda from a grid scan on the same data.
  cfg.dlimd.eps.resize(3);
  cfg.dlimd.eps << 1.8, 0.8, 4.7;
  cfg.dlimd.tv_lambda = 1e-3;

  cfg.basis_rois = {
      {"basis-water", "water", RoiRect{120, 120, 16, 16}, {}},
      {"basis-aluminum", "aluminum", RoiRect{80, 84, 16, 16}, {}},
      {"basis-iodine", "iodine_solution", RoiRect{80, 156, 16, 16}, {}},
  };
  cfg.eval_rois = {
      {"ROI-1-aluminum", "aluminum", RoiRect{74, 78, 28, 28}, {}},
      {"ROI-2-iodine-ref", "iodine_solution", RoiRect{74, 150, 28, 28}, {}},
      {"ROI-3-iodine-dilute", "iodine_solution", RoiRect{156, 78, 28, 28}, {}},
      {"ROI-4-aluminum-half", "aluminum", RoiRect{156, 150, 28, 28}, {}},
      {"ROI-5-water", "water", RoiRect{114, 114, 28, 28}, {}},
  };
  cfg.material_windows = {{0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}};
  return cfg;
}

}  // namespace

std::vector<int> RoiSpec::resolve(int rows, int cols) const {
  std::vector<int> out;
  if (rect) {
    const auto& r = *rect;
    if (r.r0 < 0 || r.c0 < 0 || r.height < 1 || r.width < 1 ||
        r.r0 + r.height > rows || r.c0 + r.width > cols)
      throw std::invalid_argument("ROI '" + name + "' leaves the image grid");
    out.reserve(static_cast<std::size_t>(r.height) * r.width);
    for (int dr = 0; dr < r.height; ++dr)
      for (int dc = 0; dc < r.width; ++dc)
        out.push_back((r.r0 + dr) * cols + (r.c0 + dc));
  } else {
    for (int p : pixels) {
      if (p < 0 || p >= rows * cols)
        throw std::invalid_argument("ROI '" + name +
                                    "' has out-of-range pixel indices");
      out.push_back(p);
    }
  }
  return out;
}

int PipelineConfig::material_index(const std::string& name) const {
  for (int m = 0; m < n_materials(); ++m)
    if (materials[m].name == name) return m;
  throw std::invalid_argument("config: unknown material '" + name + "'");
}

PipelineConfig PipelineConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("config: cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError("config: " + path + " is not valid JSON: " + e.what());
  }
  return from_json(j, std::filesystem::path(path).parent_path().string());
}

PipelineConfig PipelineConfig::from_json(const json& j,
                                         const std::string& base_dir) {
  PipelineConfig cfg = default_config();
  check_keys(j, "config",
             {"phantom", "geometry", "spectrum", "noise", "dictionary",
              "dlimd", "tvmd", "rois", "outputs"});

  if (j.contains("phantom")) {
    const auto& p = j["phantom"];
    check_keys(p, "phantom",
               {"rows", "cols", "pixel_size_cm", "materials", "disks"});
    if (p.contains("rows")) cfg.phantom.rows = integer(p["rows"], "phantom.rows");
    if (p.contains("cols")) cfg.phantom.cols = integer(p["cols"], "phantom.cols");
    if (p.contains("pixel_size_cm"))
      cfg.phantom.pixel_size_cm = num(p["pixel_size_cm"], "phantom.pixel_size_cm");
    if (p.contains("materials")) {
      if (!p["materials"].is_array()) fail("phantom.materials", "expected array");
      cfg.materials.clear();
      for (std::size_t i = 0; i < p["materials"].size(); ++i) {
        const auto& m = p["materials"][i];
        const std::string path = "phantom.materials[" + std::to_string(i) + "]";
        check_keys(m, path, {"name", "density"});
        if (!m.contains("name")) fail(path, "missing name");
        cfg.materials.push_back(
            {str(m["name"], path + ".name"),
             m.contains("density") ? num(m["density"], path + ".density") : 1.0});
      }
      cfg.phantom.n_materials = static_cast<int>(cfg.materials.size());
      // A material list without explicit disks invalidates the defaults.
      if (!p.contains("disks")) cfg.phantom.disks.clear();
      cfg.basis_rois.clear();
      cfg.eval_rois.clear();
      cfg.material_windows.assign(cfg.materials.size(), {0.0, 1.0});
      cfg.dlimd.eps = Eigen::VectorXd::Constant(cfg.n_materials(), 0.05);
    }
    if (p.contains("disks")) {
      if (!p["disks"].is_array()) fail("phantom.disks", "expected array");
      cfg.phantom.disks.clear();
      for (std::size_t i = 0; i < p["disks"].size(); ++i) {
        const auto& d = p["disks"][i];
        const std::string path = "phantom.disks[" + std::to_string(i) + "]";
        check_keys(d, path,
                   {"center_row", "center_col", "radius", "material", "fraction"});
        DiskSpec disk;
        if (d.contains("center_row"))
          disk.center_row = num(d["center_row"], path + ".center_row");
        if (d.contains("center_col"))
          disk.center_col = num(d["center_col"], path + ".center_col");
        if (d.contains("radius")) disk.radius = num(d["radius"], path + ".radius");
        if (!d.contains("material")) fail(path, "missing material");
        if (d["material"].is_string())
          disk.material = cfg.material_index(str(d["material"], path));
        else
          disk.material = integer(d["material"], path + ".material");
        if (d.contains("fraction"))
          disk.fraction = num(d["fraction"], path + ".fraction");
        cfg.phantom.disks.push_back(disk);
      }
    }
    cfg.geometry.rows = cfg.phantom.rows;
    cfg.geometry.cols = cfg.phantom.cols;
    cfg.geometry.pixel_size_cm = cfg.phantom.pixel_size_cm;
  }

  if (j.contains("geometry")) {
    const auto& g = j["geometry"];
    check_keys(g, "geometry", {"n_angles", "n_detectors", "det_spacing_cm"});
    if (g.contains("n_angles"))
      cfg.geometry.n_angles = integer(g["n_angles"], "geometry.n_angles");
    if (g.contains("n_detectors"))
      cfg.geometry.n_detectors = integer(g["n_detectors"], "geometry.n_detectors");
    if (g.contains("det_spacing_cm"))
      cfg.geometry.det_spacing_cm = num(g["det_spacing_cm"], "geometry.det_spacing_cm");
  }

  if (j.contains("spectrum")) {
    const auto& s = j["spectrum"];
    check_keys(s, "spectrum", {"table", "bins"});
    if (s.contains("table")) cfg.table_path = str(s["table"], "spectrum.table");
    if (s.contains("bins")) {
      if (!s["bins"].is_array()) fail("spectrum.bins", "expected array");
      cfg.bins.bins.clear();
      for (std::size_t i = 0; i < s["bins"].size(); ++i) {
        const auto& b = s["bins"][i];
        const std::string path = "spectrum.bins[" + std::to_string(i) + "]";
        check_keys(b, path, {"e_lo", "e_hi", "e_eff", "i0"});
        EnergyBin bin;
        if (!b.contains("e_lo") || !b.contains("e_hi") || !b.contains("e_eff"))
          fail(path, "bins need e_lo, e_hi and e_eff");
        bin.e_lo = num(b["e_lo"], path + ".e_lo");
        bin.e_hi = num(b["e_hi"], path + ".e_hi");
        bin.e_eff = num(b["e_eff"], path + ".e_eff");
        bin.i0 = b.contains("i0") ? num(b["i0"], path + ".i0") : 0.0;
        cfg.bins.bins.push_back(bin);
      }
    }
  }

  if (j.contains("noise")) {
    const auto& n = j["noise"];
    check_keys(n, "noise", {"enabled", "seed", "i0", "count_floor"});
    if (n.contains("enabled")) {
      if (!n["enabled"].is_boolean()) fail("noise.enabled", "expected a boolean");
      cfg.noise_enabled = n["enabled"].get<bool>();
    }
    if (n.contains("seed")) {
      if (!n["seed"].is_number_integer()) fail("noise.seed", "expected an integer");
      cfg.seed = n["seed"].get<std::uint64_t>();
    }
    if (n.contains("i0")) cfg.default_i0 = num(n["i0"], "noise.i0");
    if (n.contains("count_floor"))
      cfg.count_floor = num(n["count_floor"], "noise.count_floor");
  }
  for (auto& bin : cfg.bins.bins)
    if (bin.i0 <= 0.0) bin.i0 = cfg.default_i0;

  if (j.contains("dictionary")) {
    const auto& d = j["dictionary"];
    check_keys(d, "dictionary",
               {"n_patches", "patch_size", "n_atoms", "train_sparsity",
                "train_iters", "seed"});
    if (d.contains("n_patches"))
      cfg.dictionary.n_patches = integer(d["n_patches"], "dictionary.n_patches");
    if (d.contains("patch_size"))
      cfg.dictionary.patch_size = integer(d["patch_size"], "dictionary.patch_size");
    if (d.contains("n_atoms"))
      cfg.dictionary.n_atoms = integer(d["n_atoms"], "dictionary.n_atoms");
    if (d.contains("train_sparsity"))
      cfg.dictionary.train_sparsity =
          integer(d["train_sparsity"], "dictionary.train_sparsity");
    if (d.contains("train_iters"))
      cfg.dictionary.train_iters =
          integer(d["train_iters"], "dictionary.train_iters");
    if (d.contains("seed")) {
      if (!d["seed"].is_number_integer())
        fail("dictionary.seed", "expected an integer");
      cfg.dictionary.seed = d["seed"].get<std::uint64_t>();
      cfg.dictionary_seed_set = true;
    }
  }

  if (j.contains("dlimd")) {
    const auto& d = j["dlimd"];
    check_keys(d, "dlimd",
               {"eta", "sparsity", "eps", "outer_iters", "air_threshold",
                "air_attenuation_frac", "stride", "prior_weight"});
    if (d.contains("eta")) cfg.dlimd.eta = num(d["eta"], "dlimd.eta");
    if (d.contains("sparsity"))
      cfg.dlimd.sparsity = integer(d["sparsity"], "dlimd.sparsity");
    if (d.contains("eps")) {
      if (!d["eps"].is_array()) fail("dlimd.eps", "expected array");
      cfg.dlimd.eps.resize(d["eps"].size());
      for (std::size_t i = 0; i < d["eps"].size(); ++i)
        cfg.dlimd.eps[static_cast<Eigen::Index>(i)] =
            num(d["eps"][i], "dlimd.eps");
    }
    if (d.contains("outer_iters"))
      cfg.dlimd.outer_iters = integer(d["outer_iters"], "dlimd.outer_iters");
    if (d.contains("air_threshold"))
      cfg.dlimd.air.threshold = num(d["air_threshold"], "dlimd.air_threshold");
    if (d.contains("air_attenuation_frac"))
      cfg.dlimd.air.attenuation_frac =
          num(d["air_attenuation_frac"], "dlimd.air_attenuation_frac");
    if (d.contains("stride"))
      cfg.dlimd.stride = integer(d["stride"], "dlimd.stride");
    if (d.contains("prior_weight"))
      cfg.dlimd.prior_weight = num(d["prior_weight"], "dlimd.prior_weight");
  }

  if (j.contains("tvmd")) {
    const auto& t = j["tvmd"];
    check_keys(t, "tvmd", {"lambda", "inner_iters"});
    if (t.contains("lambda"))
      cfg.dlimd.tv_lambda = num(t["lambda"], "tvmd.lambda");
    if (t.contains("inner_iters"))
      cfg.dlimd.tv_inner_iters = integer(t["inner_iters"], "tvmd.inner_iters");
  }

  if (j.contains("rois")) {
    const auto& r = j["rois"];
    check_keys(r, "rois", {"basis", "eval"});
    if (r.contains("basis")) {
      if (!r["basis"].is_array()) fail("rois.basis", "expected array");
      cfg.basis_rois.clear();
      for (std::size_t i = 0; i < r["basis"].size(); ++i)
        cfg.basis_rois.push_back(
            parse_roi(r["basis"][i], "rois.basis[" + std::to_string(i) + "]"));
    }
    if (r.contains("eval")) {
      if (!r["eval"].is_array()) fail("rois.eval", "expected array");
      cfg.eval_rois.clear();
      for (std::size_t i = 0; i < r["eval"].size(); ++i)
        cfg.eval_rois.push_back(
            parse_roi(r["eval"][i], "rois.eval[" + std::to_string(i) + "]"));
    }
  }

  if (j.contains("outputs")) {
    const auto& o = j["outputs"];
    check_keys(o, "outputs", {"directory", "material_windows"});
    if (o.contains("directory"))
      cfg.out_dir = str(o["directory"], "outputs.directory");
    if (o.contains("material_windows")) {
      if (!o["material_windows"].is_array())
        fail("outputs.material_windows", "expected array");
      cfg.material_windows.clear();
      for (const auto& w : o["material_windows"]) {
        if (!w.is_array() || w.size() != 2)
          fail("outputs.material_windows", "each window is [lo, hi]");
        cfg.material_windows.emplace_back(num(w[0], "outputs.material_windows"),
                                          num(w[1], "outputs.material_windows"));
      }
    }
  }

  // resolve the table path against the config location
  std::filesystem::path tp(cfg.table_path);
  cfg.table_path_resolved =
      tp.is_absolute() || base_dir.empty()
          ? tp.string()
          : (std::filesystem::path(base_dir) / tp).string();

  if (!cfg.dictionary_seed_set)
    cfg.dictionary.seed = cfg.seed * 0x9e3779b97f4a7c15ULL + 0x6a09e667f3bcc909ULL;

  cfg.validate();
  return cfg;
}

void PipelineConfig::validate() const {
  if (materials.empty()) throw std::invalid_argument("config: no materials");
  if (phantom.n_materials != n_materials())
    throw std::invalid_argument("config: phantom/material count mismatch");
  for (const auto& m : materials)
    if (!(m.density > 0.0))
      throw std::invalid_argument("config: nonpositive density for " + m.name);
  geometry.validate();
  bins.validate();
  if (!(count_floor > 0.0))
    throw std::invalid_argument("config: count_floor must be > 0");
  dictionary.validate();
  dlimd.validate(n_materials());
  if (static_cast<int>(basis_rois.size()) != n_materials())
    throw std::invalid_argument("config: need one basis ROI per material");
  for (const auto& roi : basis_rois) {
    material_index(roi.material);
    roi.resolve(phantom.rows, phantom.cols);
  }
  for (const auto& roi : eval_rois) {
    material_index(roi.material);
    roi.resolve(phantom.rows, phantom.cols);
  }
  if (static_cast<int>(material_windows.size()) != n_materials())
    throw std::invalid_argument("config: need one render window per material");
  for (const auto& [lo, hi] : material_windows)
    if (!(lo < hi))
      throw std::invalid_argument("config: render window needs lo < hi");
}

nlohmann::json PipelineConfig::to_json() const {
  json j;
  json mats = json::array();
  for (const auto& m : materials)
    mats.push_back({{"name", m.name}, {"density", m.density}});
  json disks = json::array();
  for (const auto& d : phantom.disks)
    disks.push_back({{"center_row", d.center_row},
                     {"center_col", d.center_col},
                     {"radius", d.radius},
                     {"material", materials[d.material].name},
                     {"fraction", d.fraction}});
  j["phantom"] = {{"rows", phantom.rows},
                  {"cols", phantom.cols},
                  {"pixel_size_cm", phantom.pixel_size_cm},
                  {"materials", mats},
                  {"disks", disks}};
  j["geometry"] = {{"n_angles", geometry.n_angles},
                   {"n_detectors", geometry.n_detectors},
                   {"det_spacing_cm", geometry.det_spacing_cm}};
  json bins_j = json::array();
  for (const auto& b : bins.bins)
    bins_j.push_back({{"e_lo", b.e_lo},
                      {"e_hi", b.e_hi},
                      {"e_eff", b.e_eff},
                      {"i0", b.i0}});
  j["spectrum"] = {{"table", table_path}, {"bins", bins_j}};
  j["noise"] = {{"enabled", noise_enabled},
                {"seed", seed},
                {"i0", default_i0},
                {"count_floor", count_floor}};
  j["dictionary"] = {{"n_patches", dictionary.n_patches},
                     {"patch_size", dictionary.patch_size},
                     {"n_atoms", dictionary.n_atoms},
                     {"train_sparsity", dictionary.train_sparsity},
                     {"train_iters", dictionary.train_iters},
                     {"seed", dictionary.seed}};
  j["dlimd"] = {{"eta", dlimd.eta},
                {"sparsity", dlimd.sparsity},
                {"eps", std::vector<double>(dlimd.eps.data(),
                                            dlimd.eps.data() + dlimd.eps.size())},
                {"outer_iters", dlimd.outer_iters},
                {"air_threshold", dlimd.air.threshold},
                {"air_attenuation_frac", dlimd.air.attenuation_frac},
                {"stride", dlimd.stride},
                {"prior_weight", dlimd.prior_weight}};
  j["tvmd"] = {{"lambda", dlimd.tv_lambda},
               {"inner_iters", dlimd.tv_inner_iters}};
  json basis_j = json::array(), eval_j = json::array();
  for (const auto& r : basis_rois) basis_j.push_back(roi_to_json(r));
  for (const auto& r : eval_rois) eval_j.push_back(roi_to_json(r));
  j["rois"] = {{"basis", basis_j}, {"eval", eval_j}};
  json windows = json::array();
  for (const auto& [lo, hi] : material_windows) windows.push_back({lo, hi});
  j["outputs"] = {{"directory", out_dir}, {"material_windows", windows}};
  return j;
}

std::string PipelineConfig::config_hash() const {
  json j = to_json();
  j["outputs"].erase("directory");
  const std::string dump = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : dump) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace sct
