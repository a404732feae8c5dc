#include "sct/attenuation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "sct/errors.hpp"

namespace sct {

void SpectrumBins::validate() const {
  if (bins.empty()) throw std::invalid_argument("SpectrumBins: no bins");
  for (std::size_t n = 0; n < bins.size(); ++n) {
    const auto& b = bins[n];
    if (!(b.e_lo < b.e_eff && b.e_eff < b.e_hi))
      throw std::invalid_argument(
          "SpectrumBins: effective energy not inside bin " + std::to_string(n));
    if (!(b.i0 > 0.0))
      throw std::invalid_argument("SpectrumBins: nonpositive flux in bin " +
                                  std::to_string(n));
    if (n > 0 && bins[n - 1].e_hi > b.e_lo + 1e-12)
      throw std::invalid_argument("SpectrumBins: bins overlap or are unordered");
  }
}

MassAttenuationTable MassAttenuationTable::from_samples(
    const std::vector<std::string>& materials,
    const std::vector<std::vector<std::pair<double, double>>>& samples) {
  if (materials.size() != samples.size())
    throw std::invalid_argument("MassAttenuationTable: name/sample mismatch");
  MassAttenuationTable t;
  t.names_ = materials;
  t.energies_.resize(materials.size());
  t.values_.resize(materials.size());
  for (std::size_t m = 0; m < materials.size(); ++m) {
    if (samples[m].size() < 2)
      throw std::invalid_argument("MassAttenuationTable: material " +
                                  materials[m] + " has fewer than 2 samples");
    for (const auto& [e, v] : samples[m]) {
      if (!t.energies_[m].empty() && e <= t.energies_[m].back())
        throw std::invalid_argument(
            "MassAttenuationTable: energies not strictly increasing for " +
            materials[m]);
      if (!(v > 0.0))
        throw std::invalid_argument(
            "MassAttenuationTable: nonpositive coefficient for " +
            materials[m]);
      t.energies_[m].push_back(e);
      t.values_[m].push_back(v);
    }
  }
  return t;
}

MassAttenuationTable MassAttenuationTable::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("attenuation table: cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw FormatError("attenuation table: empty file " + path);
  // Header is required; be lenient about whitespace.
  {
    std::string h = line;
    h.erase(std::remove_if(h.begin(), h.end(), ::isspace), h.end());
    if (h != "material,energy_keV,mu_over_rho")
      throw FormatError("attenuation table: bad header in " + path +
                        " (want material,energy_keV,mu_over_rho)");
  }
  std::vector<std::string> names;
  std::vector<std::vector<std::pair<double, double>>> samples;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string mat, e_str, v_str;
    if (!std::getline(ss, mat, ',') || !std::getline(ss, e_str, ',') ||
        !std::getline(ss, v_str))
      throw FormatError("attenuation table: malformed line " +
                        std::to_string(lineno) + " in " + path);
    double e = 0.0, v = 0.0;
    try {
      e = std::stod(e_str);
      v = std::stod(v_str);
    } catch (const std::exception&) {
      throw FormatError("attenuation table: bad number at line " +
                        std::to_string(lineno) + " in " + path);
    }
    auto it = std::find(names.begin(), names.end(), mat);
    std::size_t idx;
    if (it == names.end()) {
      names.push_back(mat);
      samples.emplace_back();
      idx = names.size() - 1;
    } else {
      idx = static_cast<std::size_t>(it - names.begin());
    }
    samples[idx].emplace_back(e, v);
  }
  return from_samples(names, samples);
}

int MassAttenuationTable::material_index(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end())
    throw std::invalid_argument("attenuation table: unknown material " + name);
  return static_cast<int>(it - names_.begin());
}

double MassAttenuationTable::attenuation_at(int material,
                                            double energy_kev) const {
  if (material < 0 || material >= material_count())
    throw std::invalid_argument("attenuation_at: material index out of range");
  const auto& e = energies_[material];
  const auto& v = values_[material];
  if (energy_kev < e.front() || energy_kev > e.back())
    throw std::out_of_range("attenuation_at: energy " +
                            std::to_string(energy_kev) +
                            " keV outside table range [" +
                            std::to_string(e.front()) + ", " +
                            std::to_string(e.back()) + "]");
  auto hi = std::lower_bound(e.begin(), e.end(), energy_kev);
  if (hi == e.begin()) return v.front();
  const std::size_t i1 = static_cast<std::size_t>(hi - e.begin());
  if (i1 == e.size()) return v.back();
  if (e[i1] == energy_kev) return v[i1];
  const std::size_t i0 = i1 - 1;
  const double t =
      (std::log(energy_kev) - std::log(e[i0])) / (std::log(e[i1]) - std::log(e[i0]));
  return std::exp((1.0 - t) * std::log(v[i0]) + t * std::log(v[i1]));
}

Eigen::MatrixXd build_attenuation_matrix_true(
    const MassAttenuationTable& table, const SpectrumBins& bins,
    const std::vector<std::string>& materials,
    const std::vector<double>& densities) {
  bins.validate();
  if (materials.size() != densities.size())
    throw std::invalid_argument(
        "build_attenuation_matrix_true: material/density count mismatch");
  const int n_bins = bins.count();
  const int n_mat = static_cast<int>(materials.size());
  Eigen::MatrixXd basis(n_bins, n_mat);
  for (int m = 0; m < n_mat; ++m) {
    const int idx = table.material_index(materials[m]);
    for (int n = 0; n < n_bins; ++n)
      basis(n, m) =
          table.attenuation_at(idx, bins.bins[n].e_eff) * densities[m];
  }
  return basis;
}

}  // namespace sct
