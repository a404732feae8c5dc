#include "sct/qp.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "sct/errors.hpp"

namespace sct {

namespace {
constexpr double kFeasTol = 1e-9;
}

PixelQpSolver::PixelQpSolver(const Eigen::MatrixXd& basis, double eta)
    : basis_(basis), eta_(eta) {
  if (eta < 0.0) throw std::invalid_argument("PixelQpSolver: negative eta");
  const int m = n_materials();
  if (m < 1) throw std::invalid_argument("PixelQpSolver: empty basis");
  hess_.noalias() = basis_.transpose() * basis_;
  hess_.diagonal().array() += eta_;

  // Enumerate ternary patterns; 0 = free, 1 = clamped low, 2 = clamped high.
  // Patterns with two high clamps can never satisfy sum f = 1.
  int n_patterns = 1;
  for (int i = 0; i < m; ++i) n_patterns *= 3;
  for (int mask = 0; mask < n_patterns; ++mask) {
    Pattern pat;
    int v = mask;
    bool skip = false;
    for (int i = 0; i < m; ++i, v /= 3) {
      switch (v % 3) {
        case 0: pat.free_idx.push_back(i); break;
        case 1: pat.lo_idx.push_back(i); break;
        case 2:
          if (pat.hi_idx >= 0) skip = true;
          pat.hi_idx = i;
          break;
      }
    }
    if (skip) continue;
    const int nf = static_cast<int>(pat.free_idx.size());
    if (nf > 0) {
      Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(nf + 1, nf + 1);
      for (int a = 0; a < nf; ++a) {
        for (int b = 0; b < nf; ++b)
          kkt(a, b) = hess_(pat.free_idx[a], pat.free_idx[b]);
        kkt(a, nf) = 1.0;
        kkt(nf, a) = 1.0;
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
      if (!lu.isInvertible()) {
        if (nf == m)
          throw NumericalError(
              "constrained_pixel_ls: singular KKT system; the basis matrix "
              "is rank deficient and eta = 0");
        continue;  // degenerate reduced system: pattern unusable
      }
      pat.kkt_inv = lu.inverse();
    }
    patterns_.push_back(std::move(pat));
  }
}

double PixelQpSolver::objective(const Eigen::Ref<const Eigen::VectorXd>& f,
                                const Eigen::Ref<const Eigen::VectorXd>& x,
                                const Eigen::Ref<const Eigen::VectorXd>& u) const {
  return 0.5 * (x - basis_ * f).squaredNorm() +
         0.5 * eta_ * (f - u).squaredNorm();
}

Eigen::VectorXd PixelQpSolver::solve(
    const Eigen::Ref<const Eigen::VectorXd>& x,
    const Eigen::Ref<const Eigen::VectorXd>& u) const {
  const int m = n_materials();
  if (x.size() != basis_.rows())
    throw std::invalid_argument("PixelQpSolver::solve: x size mismatch");
  if (u.size() != m)
    throw std::invalid_argument("PixelQpSolver::solve: u size mismatch");

  // Linear term of the quadratic: 1/2 f^T H f - c^T f (+ const).
  Eigen::VectorXd c = basis_.transpose() * x;
  if (eta_ > 0.0) c += eta_ * u;

  Eigen::VectorXd best;
  double best_val = std::numeric_limits<double>::infinity();
  Eigen::VectorXd f(m), rhs, sol;

  for (const auto& pat : patterns_) {
    const int nf = static_cast<int>(pat.free_idx.size());
    f.setZero();
    if (pat.hi_idx >= 0) f[pat.hi_idx] = 1.0;

    if (nf == 0) {
      // Fully clamped: feasible only when the clamps already sum to one.
      if (pat.hi_idx < 0) continue;
    } else {
      rhs.resize(nf + 1);
      for (int a = 0; a < nf; ++a) {
        double v = c[pat.free_idx[a]];
        if (pat.hi_idx >= 0) v -= hess_(pat.free_idx[a], pat.hi_idx);
        rhs[a] = v;
      }
      rhs[nf] = (pat.hi_idx >= 0) ? 0.0 : 1.0;
      sol.noalias() = pat.kkt_inv * rhs;
      bool feasible = true;
      for (int a = 0; a < nf; ++a) {
        const double val = sol[a];
        if (val < -kFeasTol || val > 1.0 + kFeasTol) {
          feasible = false;
          break;
        }
      }
      if (!feasible) continue;
      for (int a = 0; a < nf; ++a) f[pat.free_idx[a]] = sol[a];
    }

    const double val = 0.5 * f.dot(hess_ * f) - c.dot(f);
    if (val < best_val) {
      best_val = val;
      best = f;
    }
  }

  // The all-free pattern always yields a KKT point and the feasible set is
  // nonempty, so a candidate must exist.
  if (best.size() == 0)
    throw NumericalError("constrained_pixel_ls: no feasible candidate found");
  for (int i = 0; i < m; ++i) best[i] = std::min(1.0, std::max(0.0, best[i]));
  return best;
}

Eigen::VectorXd constrained_pixel_ls(const Eigen::MatrixXd& basis,
                                     const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& u, double eta) {
  PixelQpSolver solver(basis, eta);
  return solver.solve(x, u);
}

}  // namespace sct
