#include "sct/ksvd.hpp"

#include <omp.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cstdlib>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "sct/parallel.hpp"

namespace sct {

namespace {

constexpr double kMinPatchNorm = 1e-12;

double code_residual_sq(const Eigen::MatrixXd& dict,
                        const Eigen::Ref<const Eigen::VectorXd>& x,
                        const SparseCode& code) {
  Eigen::VectorXd r = x;
  for (int i = 0; i < code.nnz(); ++i)
    r -= code.coeffs[i] * dict.col(code.atoms[i]);
  return r.squaredNorm();
}

SparseCode refit_on_support(const Eigen::MatrixXd& dict,
                            const Eigen::Ref<const Eigen::VectorXd>& x,
                            const std::vector<int>& support) {
  SparseCode code;
  code.atoms = support;
  if (support.empty()) {
    code.coeffs.resize(0);
    return code;
  }
  Eigen::MatrixXd sub(dict.rows(), support.size());
  for (std::size_t i = 0; i < support.size(); ++i)
    sub.col(i) = dict.col(support[i]);
  code.coeffs = sub.colPivHouseholderQr().solve(x);
  return code;
}

}  // namespace

TrainingSet build_training_set(const Tensor3& materials,
                               const TrainConfig& cfg) {
  cfg.validate();
  if (!materials.all_finite())
    throw std::invalid_argument("build_training_set: non-finite input");
  const int s = cfg.patch_size;
  const int rows = materials.rows();
  const int cols = materials.cols();
  const int n_mat = materials.channels();
  if (s > rows || s > cols)
    throw std::invalid_argument(
        "build_training_set: patch size exceeds image extent");

  const auto [normalized, rec] = normalize_materials(materials);
  const Eigen::MatrixXd plane = mode_unfold(normalized, 1);

  // Valid anchors never straddle two channel sub-images: rows 0..rows-s,
  // columns m*cols .. m*cols + (cols-s) within each channel block m.
  const int rows_per = rows - s + 1;
  const int cols_per = cols - s + 1;
  const std::int64_t total =
      static_cast<std::int64_t>(rows_per) * cols_per * n_mat;
  auto anchor_of = [&](std::int64_t idx) {
    const int m = static_cast<int>(idx / (static_cast<std::int64_t>(rows_per) * cols_per));
    const std::int64_t rem = idx % (static_cast<std::int64_t>(rows_per) * cols_per);
    const int ar = static_cast<int>(rem / cols_per);
    const int ac = static_cast<int>(rem % cols_per) + m * cols;
    return std::pair<int, int>(ar, ac);
  };

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::int64_t> chosen(cfg.n_patches);
  TrainingSet out;
  if (total >= cfg.n_patches) {
    // Partial Fisher-Yates over the anchor index space.
    std::vector<std::int64_t> pool(total);
    std::iota(pool.begin(), pool.end(), std::int64_t{0});
    for (int i = 0; i < cfg.n_patches; ++i) {
      std::uniform_int_distribution<std::int64_t> pickd(i, total - 1);
      std::swap(pool[i], pool[pickd(rng)]);
      chosen[i] = pool[i];
    }
  } else {
    out.with_replacement = true;
    std::uniform_int_distribution<std::int64_t> pickd(0, total - 1);
    for (int i = 0; i < cfg.n_patches; ++i) chosen[i] = pickd(rng);
  }

  PatchSet& ps = out.patches;
  ps.patch_size = s;
  ps.patches.resize(s * s, cfg.n_patches);
  ps.anchors.reserve(cfg.n_patches);
  for (int i = 0; i < cfg.n_patches; ++i) {
    const auto [ar, ac] = anchor_of(chosen[i]);
    for (int dc = 0; dc < s; ++dc)
      for (int dr = 0; dr < s; ++dr)
        ps.patches(dr + dc * s, i) = plane(ar + dr, ac + dc);
    // The dictionary codes AC content; the DC level is restored per patch at
    // denoising time. Leaving the mean in would spend the whole sparsity
    // budget on intensity levels.
    ps.patches.col(i).array() -= ps.patches.col(i).mean();
    ps.anchors.emplace_back(ar, ac);
  }
  return out;
}

KsvdResult ksvd_train(const PatchSet& training, const TrainConfig& cfg) {
  return ksvd_train(training, cfg, Eigen::MatrixXd());
}

KsvdResult ksvd_train(const PatchSet& training, const TrainConfig& cfg,
                      const Eigen::MatrixXd& init_atoms) {
  const Eigen::MatrixXd& X = training.patches;
  const int n_signals = static_cast<int>(X.cols());
  const int s_size = static_cast<int>(X.rows());
  const int n_atoms = cfg.n_atoms;
  if (n_signals < n_atoms)
    throw std::invalid_argument("ksvd_train: fewer patches than atoms");
  if (cfg.train_sparsity > s_size)
    throw std::invalid_argument("ksvd_train: sparsity exceeds signal size");
  if (X.colwise().norm().maxCoeff() <= kMinPatchNorm)
    throw std::invalid_argument("ksvd_train: all-zero training set");

  // Initial atoms: distinct training patches in seeded shuffle order,
  // skipping (near) zero patches.
  std::mt19937_64 rng(cfg.seed);
  std::vector<int> order(n_signals);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  Eigen::MatrixXd dict(s_size, n_atoms);
  if (init_atoms.size() > 0) {
    if (init_atoms.rows() != s_size || init_atoms.cols() != n_atoms)
      throw std::invalid_argument("ksvd_train: init atoms shape mismatch");
    dict = init_atoms;
    for (int j = 0; j < n_atoms; ++j) {
      const double n = dict.col(j).norm();
      if (n <= kMinPatchNorm)
        throw std::invalid_argument("ksvd_train: zero init atom");
      dict.col(j) /= n;
    }
  } else {
    int filled = 0;
    for (int idx : order) {
      if (filled == n_atoms) break;
      const double n = X.col(idx).norm();
      if (n <= kMinPatchNorm) continue;
      dict.col(filled++) = X.col(idx) / n;
    }
    // Not enough usable patches: pad with unit basis vectors.
    for (int j = 0; filled < n_atoms; ++j, ++filled)
      dict.col(filled) = Eigen::VectorXd::Unit(s_size, j % s_size);
  }

  std::vector<SparseCode> codes(n_signals);
  std::vector<double> resid_sq(n_signals,
                               std::numeric_limits<double>::infinity());
  Eigen::VectorXd objective(cfg.train_iters);

  const int n_threads = max_threads();
  std::vector<OmpSolver::Workspace> workspaces(n_threads);
  Eigen::MatrixXd alpha0(n_atoms, n_signals);

  std::vector<std::vector<int>> users(n_atoms);    // patches using each atom
  std::vector<double> stale_resid(n_signals);      // for dead-atom choice
  std::vector<char> consumed(n_signals);           // patches taken by dead atoms

  for (int iter = 0; iter < cfg.train_iters; ++iter) {
    // --- sparse coding ---
    OmpSolver solver(dict);
    alpha0.noalias() = dict.transpose() * X;
#pragma omp parallel for schedule(static) num_threads(n_threads)
    for (int i = 0; i < n_signals; ++i) {
      auto& ws = workspaces[omp_get_thread_num()];
      SparseCode fresh = solver.encode_precomputed(
          alpha0.col(i), X.col(i).squaredNorm(), cfg.train_sparsity, 0.0, ws);
      const double fresh_resid = code_residual_sq(dict, X.col(i), fresh);
      const double old_resid =
          (iter == 0) ? std::numeric_limits<double>::infinity()
                      : code_residual_sq(dict, X.col(i), codes[i]);
      // Keep whichever code represents the patch better under the current
      // dictionary; OMP is greedy and may occasionally lose to the old code.
      if (fresh_resid <= old_resid) {
        codes[i] = std::move(fresh);
        resid_sq[i] = fresh_resid;
      } else {
        resid_sq[i] = old_resid;
      }
    }

    // --- atom updates (sequential: each update sees prior ones) ---
    for (auto& u : users) u.clear();
    for (int i = 0; i < n_signals; ++i)
      for (int a : codes[i].atoms) users[a].push_back(i);
    std::copy(resid_sq.begin(), resid_sq.end(), stale_resid.begin());
    std::fill(consumed.begin(), consumed.end(), 0);

    for (int j = 0; j < n_atoms; ++j) {
      const auto& omega = users[j];
      if (omega.empty()) {
        // Dead atom: replace by the worst-represented patch. The atom is
        // unused, so the swap leaves the objective unchanged.
        int worst = -1;
        double worst_val = -1.0;
        for (int i = 0; i < n_signals; ++i) {
          if (consumed[i]) continue;
          if (stale_resid[i] > worst_val && X.col(i).norm() > kMinPatchNorm) {
            worst_val = stale_resid[i];
            worst = i;
          }
        }
        if (worst >= 0) {
          consumed[worst] = 1;
          dict.col(j) = X.col(worst) / X.col(worst).norm();
        }
        continue;
      }

      // Residual restricted to the users of atom j, with j's own
      // contribution added back: E = X_omega - D B_omega + d_j g^T.
      const int n_use = static_cast<int>(omega.size());
      Eigen::MatrixXd E(s_size, n_use);
      for (int t = 0; t < n_use; ++t) {
        const int i = omega[t];
        Eigen::VectorXd r = X.col(i);
        for (int p = 0; p < codes[i].nnz(); ++p) {
          if (codes[i].atoms[p] == j) continue;
          r -= codes[i].coeffs[p] * dict.col(codes[i].atoms[p]);
        }
        E.col(t) = r;
      }

      // Rank-1 fit by power iteration on E E^T, started from the current
      // atom so the Rayleigh quotient (and hence the fit) cannot degrade.
      Eigen::VectorXd u = dict.col(j);
      for (int it = 0; it < 15; ++it) {
        Eigen::VectorXd v = E * (E.transpose() * u);
        const double n = v.norm();
        if (n <= 1e-300) break;
        u = v / n;
      }
      Eigen::VectorXd g = E.transpose() * u;
      dict.col(j) = u;
      for (int t = 0; t < n_use; ++t) {
        const int i = omega[t];
        for (int p = 0; p < codes[i].nnz(); ++p)
          if (codes[i].atoms[p] == j) codes[i].coeffs[p] = g[t];
      }
    }

    // --- adopt-worst cleanup ---
    // Merged or redundant atoms trap the training in a local minimum while
    // some structure stays unrepresented and its patches keep large
    // residuals. Escape move: sacrifice the atom that is cheapest to drop
    // (every user recoded by OMP over the remaining atoms, exact residuals)
    // and hand the freed slot to the worst-represented patch, recoded
    // 1-sparse onto it. A move commits only when the recode losses are
    // covered by the adopted patch's residual, so the objective never
    // increases.
    for (int i = 0; i < n_signals; ++i)
      resid_sq[i] = code_residual_sq(dict, X.col(i), codes[i]);
    double mean_resid = 0.0;
    for (int i = 0; i < n_signals; ++i) mean_resid += resid_sq[i];
    mean_resid /= n_signals;
    bool solver_stale = true;
    OmpSolver cleanup_solver(dict);
    Eigen::MatrixXd gram_abs;
    OmpSolver::Workspace cws;
    const int max_moves = []() {
      if (const char* env = std::getenv("SCT_KSVD_MOVES")) return std::atoi(env);
      return 8;
    }();
    for (int move = 0; move < max_moves; ++move) {
      int worst = -1;
      double gain = -1.0;
      for (int i = 0; i < n_signals; ++i) {
        if (consumed[i]) continue;
        if (resid_sq[i] > gain && X.col(i).norm() > kMinPatchNorm) {
          gain = resid_sq[i];
          worst = i;
        }
      }
      // Only gross under-representation is worth an escape move.
      if (worst < 0 || gain <= std::max(1e-12, 10.0 * mean_resid)) break;

      if (solver_stale) {
        cleanup_solver = OmpSolver(dict);
        gram_abs = cleanup_solver.gram().cwiseAbs();
        solver_stale = false;
      }

      // Candidate sacrifices: the most redundant atoms (highest partner
      // coherence) plus the least-used ones; exact recode losses are
      // evaluated only for this shortlist.
      std::vector<std::pair<double, int>> by_coh, by_usage;
      for (int b = 0; b < n_atoms; ++b) {
        if (users[b].empty()) continue;
        double coh = 0.0;
        for (int a = 0; a < n_atoms; ++a)
          if (a != b) coh = std::max(coh, gram_abs(a, b));
        by_coh.push_back({coh, b});
        by_usage.push_back({static_cast<double>(users[b].size()), b});
      }
      std::sort(by_coh.begin(), by_coh.end(), std::greater<>());
      std::sort(by_usage.begin(), by_usage.end());
      std::vector<int> shortlist;
      for (std::size_t i = 0; i < by_coh.size() && i < 12; ++i)
        shortlist.push_back(by_coh[i].second);
      for (std::size_t i = 0; i < by_usage.size() && i < 8; ++i)
        if (std::find(shortlist.begin(), shortlist.end(),
                      by_usage[i].second) == shortlist.end())
          shortlist.push_back(by_usage[i].second);

      int best_b = -1;
      double best_loss = std::numeric_limits<double>::infinity();
      std::vector<SparseCode> best_codes;
      for (int b : shortlist) {
        std::vector<SparseCode> cand(users[b].size());
        double loss = 0.0;
        bool complete = true;
        for (std::size_t t = 0; t < users[b].size(); ++t) {
          const int i = users[b][t];
          cws.alpha0.noalias() = dict.transpose() * X.col(i);
          cand[t] = cleanup_solver.encode_precomputed(
              cws.alpha0, X.col(i).squaredNorm(), cfg.train_sparsity, 0.0,
              cws, b);
          loss += code_residual_sq(dict, X.col(i), cand[t]) - resid_sq[i];
          if (loss >= std::min(best_loss, gain)) {  // cannot win
            complete = false;
            break;
          }
        }
        if (complete && loss < best_loss) {
          best_loss = loss;
          best_b = b;
          best_codes = std::move(cand);
        }
      }
      if (best_b < 0 || best_loss - gain > 1e-12) break;

      for (std::size_t t = 0; t < users[best_b].size(); ++t) {
        const int i = users[best_b][t];
        codes[i] = std::move(best_codes[t]);
        resid_sq[i] = code_residual_sq(dict, X.col(i), codes[i]);
        // keep the user lists a superset of the true users so later loss
        // evaluations in this pass never miss an affected patch
        for (int a : codes[i].atoms)
          if (std::find(users[a].begin(), users[a].end(), i) == users[a].end())
            users[a].push_back(i);
      }
      users[best_b].clear();
      const double norm = X.col(worst).norm();
      dict.col(best_b) = X.col(worst) / norm;
      codes[worst].atoms = {best_b};
      codes[worst].coeffs = Eigen::VectorXd::Constant(1, norm);
      resid_sq[worst] = 0.0;
      consumed[worst] = 1;
      users[best_b].push_back(worst);
      solver_stale = true;
    }

    // --- objective after the full iteration ---
    double obj = 0.0;
    for (int i = 0; i < n_signals; ++i) {
      resid_sq[i] = code_residual_sq(dict, X.col(i), codes[i]);
      obj += resid_sq[i];
    }
    objective[iter] = obj;
  }

  KsvdResult result;
  result.dictionary.atoms = std::move(dict);
  result.dictionary.patch_size = cfg.patch_size;
  result.objective = std::move(objective);
  return result;
}

}  // namespace sct
