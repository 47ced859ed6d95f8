#include "alphacl/energy.hpp"

#include <sstream>

#include "alphacl/io.hpp"
#include "alphacl/jacobi.hpp"

namespace alphacl {
namespace {

Result<Unit> check_pair_shapes(const PairImportance& pi,
                               const Eigen::MatrixXd& a,
                               const Eigen::MatrixXd& a_aug) {
  const Eigen::Index n = pi.alpha.rows();
  if (pi.alpha.cols() != n) {
    return Error{Errc::kShapeMismatch, "alpha must be square"};
  }
  if (a.rows() != n || a_aug.rows() != n || a.cols() != a_aug.cols()) {
    return Error{Errc::kShapeMismatch, "signal shapes do not match alpha"};
  }
  return Unit{};
}

}  // namespace

Result<Eigen::MatrixXd> contrastive_cov(const PairImportance& pi,
                                        const Eigen::MatrixXd& a,
                                        const Eigen::MatrixXd& a_aug,
                                        const Eigen::MatrixXd& b,
                                        const Eigen::MatrixXd& b_aug) {
  ALPHACL_TRY_ASSIGN(u1, check_pair_shapes(pi, a, a_aug));
  (void)u1;
  ALPHACL_TRY_ASSIGN(u2, check_pair_shapes(pi, b, b_aug));
  (void)u2;

  const Eigen::Index n = pi.alpha.rows();
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(a.cols(), b.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    double beta = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      beta += pi.alpha(i, j);
      c.noalias() += pi.alpha(i, j) * (a.row(i) - a.row(j)).transpose() *
                     (b.row(i) - b.row(j));
    }
    c.noalias() -= beta * (a.row(i) - a_aug.row(i)).transpose() *
                   (b.row(i) - b_aug.row(i));
  }
  return c;
}

Result<double> energy(const PairImportance& pi, const Eigen::MatrixXd& z,
                      const Eigen::MatrixXd& z_aug) {
  ALPHACL_TRY_ASSIGN(c, contrastive_cov(pi, z, z_aug, z, z_aug));
  return 0.5 * c.trace();
}

Result<double> energy_from_distances(const PairImportance& pi,
                                     const DistanceSet& d) {
  const Eigen::Index n = pi.alpha.rows();
  if (pi.alpha.cols() != n || d.cross.rows() != n || d.intra.size() != n) {
    return Error{Errc::kShapeMismatch, "alpha/distance shapes inconsistent"};
  }
  double e = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) e += pi.alpha(i, j) * (d.cross(i, j) - d.intra(i));
    }
  }
  return e;
}

Status write_symmetric_with_spectrum_csv(const std::string& path,
                                         const Eigen::MatrixXd& m) {
  ALPHACL_TRY_ASSIGN(dec, jacobi_eigen_symmetric(m));
  {
    auto st = write_matrix_csv(path, m);
    if (!st.ok()) return st;
  }
  std::ostringstream out;
  out << "eigenvalue\n";
  for (Eigen::Index k = 0; k < dec.values.size(); ++k) {
    out << format_double(dec.values(k)) << '\n';
  }
  return write_file_atomic(path + ".eigs.csv", out.str());
}

}  // namespace alphacl
