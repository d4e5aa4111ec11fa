#include "numit/random.hpp"

#include <cmath>

#include "numit/error.hpp"

namespace numit {

Eigen::MatrixXd standard_normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

Eigen::MatrixXd sample_wishart_identity(Eigen::Index dim, double dof, Rng& rng) {
  if (dim < 1 || dof < static_cast<double>(dim))
    throw Error(ErrorKind::InvalidArgument, "Wishart needs dim >= 1 and dof >= dim");

  // Bartlett: W = L L^T with L_ii^2 ~ chi2(dof - i) and N(0,1) below the diagonal.
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    std::chi_squared_distribution<double> chi2(dof - static_cast<double>(i));
    l(i, i) = std::sqrt(chi2(rng));
    for (Eigen::Index j = 0; j < i; ++j) l(i, j) = normal(rng);
  }
  Eigen::MatrixXd w = l * l.transpose();
  return 0.5 * (w + w.transpose());
}

std::vector<double> sample_dirichlet(std::size_t k, double alpha, Rng& rng) {
  if (!(alpha > 0.0)) throw Error(ErrorKind::InvalidArgument, "Dirichlet alpha must be positive");
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<double> p(k);
  double total = 0.0;
  // Very small alpha can underflow every draw to zero; redraw in that case.
  while (!(total > 0.0)) {
    total = 0.0;
    for (auto& x : p) {
      x = gamma(rng);
      total += x;
    }
  }
  for (auto& x : p) x /= total;
  return p;
}

}  // namespace numit
