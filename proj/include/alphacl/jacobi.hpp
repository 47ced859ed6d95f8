#pragma once

#include <Eigen/Dense>

#include "alphacl/result.hpp"

namespace alphacl {

// Self-contained symmetric eigensolver: cyclic Jacobi rotations. Used as the
// independent reference when verifying spectral claims; the dynamics code
// never calls it, so convergence checks do not share a code path with the
// thing being checked.
struct EigenDecomposition {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // unit columns, matching order
};

Result<EigenDecomposition> jacobi_eigen_symmetric(const Eigen::MatrixXd& a,
                                                  int max_sweeps = 100,
                                                  double rel_tol = 1e-14);

}  // namespace alphacl
