#ifndef SCT_DICTIONARY_HPP
#define SCT_DICTIONARY_HPP

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace sct {

/// Sparse representation over dictionary atoms: parallel arrays of unique
/// atom indices (in selection order) and their least-squares coefficients.
struct SparseCode {
  std::vector<int> atoms;
  Eigen::VectorXd coeffs;

  int nnz() const { return static_cast<int>(atoms.size()); }
};

/// Overcomplete patch dictionary with unit-norm columns.
struct Dictionary {
  Eigen::MatrixXd atoms;  // S x T, S = patch_size^2
  int patch_size = 0;

  int atom_count() const { return static_cast<int>(atoms.cols()); }
  int signal_size() const { return static_cast<int>(atoms.rows()); }
  /// Checks S == patch_size^2 and unit column norms within 1e-10.
  void validate() const;
};

struct TrainConfig {
  int n_patches = 10000;
  int patch_size = 8;
  int n_atoms = 512;
  int train_sparsity = 6;
  int train_iters = 200;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Orthogonal matching pursuit with an exact least-squares refit of the
/// active set at every step (progressive Cholesky on the Gram matrix).
///
/// Selection: the atom with the largest |correlation| against the current
/// residual; ties break to the lowest index. A candidate whose entry would
/// make the active Gram factor numerically singular (duplicate atom) is
/// skipped permanently. Stops when ||x - D b||_2 <= eps, when the code holds
/// max_sparsity atoms, or when every atom is exhausted.
class OmpSolver {
 public:
  explicit OmpSolver(const Eigen::MatrixXd& dict);

  /// Scratch buffers reused across encode calls; one per thread.
  struct Workspace {
    Eigen::VectorXd corr;        // T running correlations
    Eigen::VectorXd alpha0;      // T initial correlations D^T x
    Eigen::MatrixXd chol;        // L_max x L_max lower-triangular factor
    Eigen::MatrixXd gram_cols;   // T x L_max gathered Gram columns
    Eigen::VectorXd coef;        // L_max active-set coefficients
    Eigen::VectorXd tmp;         // L_max
    std::vector<char> excluded;  // T selection mask
  };

  SparseCode encode(const Eigen::Ref<const Eigen::VectorXd>& x,
                    int max_sparsity, double eps, Workspace& ws) const;

  /// Batch entry point: alpha0 = D^T x precomputed by the caller (one GEMM
  /// for many signals), x_sq_norm = ||x||^2. `exclude_atom` (when >= 0)
  /// removes one atom from selection.
  SparseCode encode_precomputed(const Eigen::Ref<const Eigen::VectorXd>& alpha0,
                                double x_sq_norm, int max_sparsity, double eps,
                                Workspace& ws, int exclude_atom = -1) const;

  const Eigen::MatrixXd& dict() const { return dict_; }
  const Eigen::MatrixXd& gram() const { return gram_; }

 private:
  Eigen::MatrixXd dict_;
  Eigen::MatrixXd gram_;  // D^T D
};

/// One-shot convenience wrapper around OmpSolver.
SparseCode omp_encode(const Eigen::MatrixXd& dict, const Eigen::VectorXd& x,
                      int max_sparsity, double eps);

/// D * b for a sparse code.
Eigen::VectorXd sparse_reconstruct(const Eigen::MatrixXd& dict,
                                   const SparseCode& code);

}  // namespace sct

#endif
