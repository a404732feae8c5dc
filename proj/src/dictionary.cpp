#include "sct/dictionary.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sct {

void Dictionary::validate() const {
  if (patch_size < 1 || signal_size() != patch_size * patch_size)
    throw std::invalid_argument(
        "Dictionary: atom rows must equal patch_size^2");
  for (Eigen::Index t = 0; t < atoms.cols(); ++t) {
    const double n = atoms.col(t).norm();
    if (std::abs(n - 1.0) > 1e-10)
      throw std::invalid_argument("Dictionary: atom " + std::to_string(t) +
                                  " is not unit norm (|norm-1| = " +
                                  std::to_string(std::abs(n - 1.0)) + ")");
  }
}

void TrainConfig::validate() const {
  if (n_patches < 1) throw std::invalid_argument("TrainConfig: n_patches < 1");
  if (patch_size < 1) throw std::invalid_argument("TrainConfig: patch_size < 1");
  if (n_atoms <= patch_size * patch_size)
    throw std::invalid_argument(
        "TrainConfig: n_atoms must exceed patch_size^2 (overcomplete)");
  if (train_sparsity < 1 || train_sparsity > patch_size * patch_size)
    throw std::invalid_argument(
        "TrainConfig: train_sparsity outside [1, patch_size^2]");
  if (train_iters < 1) throw std::invalid_argument("TrainConfig: train_iters < 1");
}

OmpSolver::OmpSolver(const Eigen::MatrixXd& dict) : dict_(dict) {
  if (dict_.size() == 0) throw std::invalid_argument("OmpSolver: empty dictionary");
  gram_.noalias() = dict_.transpose() * dict_;
}

SparseCode OmpSolver::encode(const Eigen::Ref<const Eigen::VectorXd>& x,
                             int max_sparsity, double eps,
                             Workspace& ws) const {
  if (x.size() != dict_.rows())
    throw std::invalid_argument("OmpSolver::encode: signal size mismatch");
  ws.alpha0.noalias() = dict_.transpose() * x;
  return encode_precomputed(ws.alpha0, x.squaredNorm(), max_sparsity, eps, ws);
}

SparseCode OmpSolver::encode_precomputed(
    const Eigen::Ref<const Eigen::VectorXd>& alpha0, double x_sq_norm,
    int max_sparsity, double eps, Workspace& ws, int exclude_atom) const {
  const int n_atoms = static_cast<int>(dict_.cols());
  if (alpha0.size() != n_atoms)
    throw std::invalid_argument("OmpSolver: alpha0 size mismatch");
  if (max_sparsity < 1)
    throw std::invalid_argument("OmpSolver: max_sparsity < 1");
  if (eps < 0.0) throw std::invalid_argument("OmpSolver: negative eps");
  if (!std::isfinite(x_sq_norm))
    throw std::invalid_argument("OmpSolver: non-finite signal");

  const int budget = std::min(max_sparsity, n_atoms);
  ws.corr = alpha0;
  if (ws.chol.rows() < budget) {
    ws.chol.resize(budget, budget);
    ws.coef.resize(budget);
    ws.tmp.resize(budget);
  }
  if (ws.gram_cols.rows() != n_atoms || ws.gram_cols.cols() < budget)
    ws.gram_cols.resize(n_atoms, budget);
  ws.excluded.assign(n_atoms, 0);
  if (exclude_atom >= 0 && exclude_atom < n_atoms) ws.excluded[exclude_atom] = 1;

  SparseCode code;
  code.atoms.reserve(budget);
  const double eps_sq = eps * eps;
  // Numerical floor: a residual this far below ||x||^2 is zero in floats.
  const double zero_floor = x_sq_norm * 1e-26;
  double resid_sq = x_sq_norm;

  while (static_cast<int>(code.atoms.size()) < budget) {
    if (resid_sq <= eps_sq || resid_sq <= zero_floor) break;

    // Next atom: largest |correlation|, lowest index on ties.
    int pick = -1;
    double best = 0.0;
    for (int j = 0; j < n_atoms; ++j) {
      if (ws.excluded[j]) continue;
      const double a = std::abs(ws.corr[j]);
      if (a > best) {
        best = a;
        pick = j;
      }
    }
    if (pick < 0 || best == 0.0) break;  // no usable correlation left

    // Grow the Cholesky factor of gram(I, I) by the candidate row; a
    // non-positive pivot means the atom is (numerically) in the span of the
    // active set, so it is excluded and selection continues.
    const int k = static_cast<int>(code.atoms.size());
    double pivot_sq = gram_(pick, pick);
    for (int i = 0; i < k; ++i) {
      double w = gram_(code.atoms[i], pick);
      for (int p = 0; p < i; ++p) w -= ws.chol(i, p) * ws.chol(k, p);
      w /= ws.chol(i, i);
      ws.chol(k, i) = w;
      pivot_sq -= w * w;
    }
    if (pivot_sq <= 1e-12 * gram_(pick, pick)) {
      ws.excluded[pick] = 1;
      continue;
    }
    ws.chol(k, k) = std::sqrt(pivot_sq);
    ws.excluded[pick] = 1;
    ws.gram_cols.col(k) = gram_.col(pick);
    code.atoms.push_back(pick);
    const int n_sel = k + 1;

    // Exact LS refit on the active set: solve (L L^T) c = alpha0_I.
    for (int i = 0; i < n_sel; ++i) {
      double v = alpha0[code.atoms[i]];
      for (int p = 0; p < i; ++p) v -= ws.chol(i, p) * ws.tmp[p];
      ws.tmp[i] = v / ws.chol(i, i);
    }
    for (int i = n_sel - 1; i >= 0; --i) {
      double v = ws.tmp[i];
      for (int p = i + 1; p < n_sel; ++p) v -= ws.chol(p, i) * ws.coef[p];
      ws.coef[i] = v / ws.chol(i, i);
    }

    // corr = alpha0 - gram(:, I) * c;  resid^2 = ||x||^2 - <alpha0_I, c>.
    ws.corr = alpha0;
    ws.corr.noalias() -=
        ws.gram_cols.leftCols(n_sel) * ws.coef.head(n_sel);
    double proj = 0.0;
    for (int i = 0; i < n_sel; ++i) proj += alpha0[code.atoms[i]] * ws.coef[i];
    resid_sq = std::max(0.0, x_sq_norm - proj);
  }

  code.coeffs = ws.coef.head(code.atoms.size());
  return code;
}

SparseCode omp_encode(const Eigen::MatrixXd& dict, const Eigen::VectorXd& x,
                      int max_sparsity, double eps) {
  OmpSolver solver(dict);
  OmpSolver::Workspace ws;
  return solver.encode(x, max_sparsity, eps, ws);
}

Eigen::VectorXd sparse_reconstruct(const Eigen::MatrixXd& dict,
                                   const SparseCode& code) {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(dict.rows());
  for (int i = 0; i < code.nnz(); ++i)
    y += code.coeffs[i] * dict.col(code.atoms[i]);
  return y;
}

}  // namespace sct
