#ifndef SCT_TV_HPP
#define SCT_TV_HPP

#include <Eigen/Core>

namespace sct {

/// Anisotropic total-variation proximal operator
///   argmin_u 1/2 ||u - f||^2 + weight * sum(|du/dx| + |du/dy|)
/// computed by projected gradient ascent on the dual (Chambolle-style,
/// componentwise clamped dual variables, forward differences with Neumann
/// boundaries). weight <= 0 returns the input.
Eigen::MatrixXd tv_prox(const Eigen::MatrixXd& f, double weight, int iters);

}  // namespace sct

#endif
