#ifndef SCT_ATTENUATION_HPP
#define SCT_ATTENUATION_HPP

#include <Eigen/Core>
#include <string>
#include <vector>

namespace sct {

/// One x-ray energy bin: counting window [e_lo, e_hi] keV, the effective
/// energy used by the monochromatic-per-bin forward model, and the incident
/// flux in photons per ray.
struct EnergyBin {
  double e_lo = 0.0;
  double e_hi = 0.0;
  double e_eff = 0.0;
  double i0 = 0.0;
};

struct SpectrumBins {
  std::vector<EnergyBin> bins;

  int count() const { return static_cast<int>(bins.size()); }
  /// Enforces e_lo < e_eff < e_hi, ordering, non-overlap and i0 > 0.
  void validate() const;
};

/// Mass-attenuation samples (energy keV -> mu/rho cm^2/g) per material,
/// queried by log-log interpolation.
class MassAttenuationTable {
 public:
  /// CSV with header material,energy_keV,mu_over_rho. Rows per material must
  /// come with strictly increasing energies and positive coefficients.
  static MassAttenuationTable load_csv(const std::string& path);
  static MassAttenuationTable from_samples(
      const std::vector<std::string>& materials,
      const std::vector<std::vector<std::pair<double, double>>>& samples);

  int material_count() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& material_names() const { return names_; }
  /// Index of a named material; throws std::invalid_argument when missing.
  int material_index(const std::string& name) const;

  /// Mass-attenuation coefficient (cm^2/g) at energy E keV, interpolated
  /// linearly in (ln E, ln mu). Exact at tabulated samples. Throws
  /// std::out_of_range when E lies outside the tabulated range.
  double attenuation_at(int material, double energy_kev) const;

 private:
  std::vector<std::string> names_;
  // per material: parallel arrays of energies and coefficients
  std::vector<std::vector<double>> energies_;
  std::vector<std::vector<double>> values_;
};

/// The simulation-oracle basis matrix: entry (n, m) is the linear attenuation
/// (cm^-1) of a unit fraction of material m at the effective energy of bin n,
/// i.e. attenuation_at(m, e_eff_n) * density_m.
///
/// `materials` selects and orders columns by table name; `densities` is the
/// mass of tabulated material per cm^3 at fraction 1 (so dilute-solution
/// bases are expressed with a small density).
Eigen::MatrixXd build_attenuation_matrix_true(
    const MassAttenuationTable& table, const SpectrumBins& bins,
    const std::vector<std::string>& materials,
    const std::vector<double>& densities);

}  // namespace sct

#endif
