#include "alphacl/jacobi.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace alphacl {

Result<EigenDecomposition> jacobi_eigen_symmetric(const Eigen::MatrixXd& a,
                                                  int max_sweeps,
                                                  double rel_tol) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || n == 0) {
    return Error{Errc::kShapeMismatch, "matrix must be square and non-empty"};
  }
  const double scale = std::max(1e-300, a.cwiseAbs().maxCoeff());
  if (((a - a.transpose()).cwiseAbs().maxCoeff()) > 1e-12 * scale) {
    return Error{Errc::kDomain, "matrix is not symmetric"};
  }

  Eigen::MatrixXd m = 0.5 * (a + a.transpose());
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);

  auto off_norm = [&]() {
    double s = 0.0;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) s += m(p, q) * m(p, q);
    }
    return std::sqrt(s);
  };

  const double stop = rel_tol * std::max(1e-300, m.norm());
  bool converged = off_norm() <= stop;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = m(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double theta = (m(q, q) - m(p, p)) / (2.0 * apq);
        const double t =
            (theta >= 0.0 ? 1.0 : -1.0) /
            (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // Rotate rows/columns p and q of m, and columns p and q of v.
        for (Eigen::Index k = 0; k < n; ++k) {
          const double mkp = m(k, p);
          const double mkq = m(k, q);
          m(k, p) = c * mkp - s * mkq;
          m(k, q) = s * mkp + c * mkq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double mpk = m(p, k);
          const double mqk = m(q, k);
          m(p, k) = c * mpk - s * mqk;
          m(q, k) = s * mpk + c * mqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
    converged = off_norm() <= stop;
  }
  if (!converged) {
    return Error{Errc::kNoConvergence, "jacobi sweeps exhausted"};
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index x, Eigen::Index y) { return m(x, x) > m(y, y); });

  EigenDecomposition dec;
  dec.values.resize(n);
  dec.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    dec.values(k) = m(order[k], order[k]);
    dec.vectors.col(k) = v.col(order[k]);
  }
  return dec;
}

}  // namespace alphacl
