#ifndef SCT_QP_HPP
#define SCT_QP_HPP

#include <Eigen/Core>
#include <vector>

namespace sct {

/// Exact solver for the per-pixel decomposition subproblem
///
///   min_f  1/2 ||x - B f||^2 + eta/2 ||f - u||^2
///   s.t.   sum_m f_m = 1,  0 <= f_m <= 1,
///
/// by enumeration of bound-activity patterns (each material free, clamped at
/// 0 or clamped at 1; at most one clamp at 1 can be feasible), solving the
/// equality-constrained KKT system on the free set with prefactorized
/// inverses. The feasible candidate with the smallest objective is the
/// global minimizer of this convex QP. M is small (<= 4 in practice), so the
/// enumeration stays within 3^M subproblems.
class PixelQpSolver {
 public:
  /// Throws NumericalError when B^T B + eta I is singular on the full free
  /// pattern (rank-deficient basis with eta = 0).
  PixelQpSolver(const Eigen::MatrixXd& basis, double eta);

  /// Exact constrained minimizer for one pixel.
  Eigen::VectorXd solve(const Eigen::Ref<const Eigen::VectorXd>& x,
                        const Eigen::Ref<const Eigen::VectorXd>& u) const;

  /// The subproblem objective 1/2 ||x - B f||^2 + eta/2 ||f - u||^2.
  double objective(const Eigen::Ref<const Eigen::VectorXd>& f,
                   const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& u) const;

  int n_materials() const { return static_cast<int>(basis_.cols()); }
  double eta() const { return eta_; }

 private:
  struct Pattern {
    std::vector<int> free_idx;
    std::vector<int> lo_idx;
    int hi_idx = -1;              // at most one material clamped at 1
    Eigen::MatrixXd kkt_inv;      // (|free|+1) square
  };

  Eigen::MatrixXd basis_;
  double eta_ = 0.0;
  Eigen::MatrixXd hess_;  // B^T B + eta I
  std::vector<Pattern> patterns_;
};

/// One-shot wrapper around PixelQpSolver.
Eigen::VectorXd constrained_pixel_ls(const Eigen::MatrixXd& basis,
                                     const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& u, double eta);

}  // namespace sct

#endif
